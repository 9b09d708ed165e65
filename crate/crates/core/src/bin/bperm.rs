fn main() {
    std::process::exit(bperm::cli::run(std::env::args_os()));
}
