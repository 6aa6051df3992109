fn main() {
    std::process::exit(normprobe::cli::run(std::env::args_os()));
}
