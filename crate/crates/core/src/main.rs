fn main() {
    std::process::exit(densecraft::cli::run(std::env::args_os()));
}
