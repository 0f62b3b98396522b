fn main() {
    std::process::exit(actgen::cli::run(std::env::args_os()));
}
