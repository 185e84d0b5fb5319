fn main() {
    std::process::exit(smer_core::cli::run(std::env::args_os()));
}
