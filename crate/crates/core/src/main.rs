fn main() {
    std::process::exit(hotspot::cli::run(std::env::args_os()));
}
