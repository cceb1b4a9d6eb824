fn main() {
    std::process::exit(dpot::cli::run(std::env::args_os()));
}
