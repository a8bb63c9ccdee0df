fn main() {
    std::process::exit(ivq::cli::run(std::env::args_os()));
}
