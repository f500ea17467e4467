fn main() {
    std::process::exit(groupact::cli::run(std::env::args_os()));
}
