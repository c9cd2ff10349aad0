fn main() {
    std::process::exit(zsic::harness::cli::run(std::env::args_os()));
}
