fn main() {
    std::process::exit(bec_sweep::cli::run(std::env::args_os()));
}
