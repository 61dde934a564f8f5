fn main() {
    std::process::exit(wfe_core::cli::run(std::env::args_os()));
}
