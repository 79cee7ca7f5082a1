fn main() {
    std::process::exit(repo_lifecycle::cli::run(std::env::args_os()));
}
