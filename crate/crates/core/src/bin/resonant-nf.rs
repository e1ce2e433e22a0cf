fn main() {
    std::process::exit(resonant_nf::cli::run(std::env::args_os()));
}
