fn main() {
    std::process::exit(elephant_duo::cli::run(std::env::args_os()));
}
