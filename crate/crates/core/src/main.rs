fn main() {
    std::process::exit(metricline::cli::run(std::env::args_os()));
}
