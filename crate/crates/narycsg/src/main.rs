fn main() {
    std::process::exit(narycsg::cli::run(std::env::args_os()));
}
