fn main() {
    std::process::exit(pcsom_cli::run(std::env::args_os()));
}
