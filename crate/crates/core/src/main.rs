fn main() {
    std::process::exit(entmux::cli::run(std::env::args_os()));
}
