fn main() {
    std::process::exit(nonlocal_mp::cli::run(std::env::args_os()));
}
