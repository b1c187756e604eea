fn main() {
    std::process::exit(prodtop::cli::run(std::env::args_os()));
}
