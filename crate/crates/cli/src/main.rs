fn main() {
    std::process::exit(mzv_cli::run(std::env::args_os()));
}
