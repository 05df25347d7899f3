fn main() { std::process::exit(graspkit::cli::run(std::env::args().skip(1).collect())); }
