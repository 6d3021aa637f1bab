use clap::Parser;

fn main() {
    let cfg = octovisc::verify::RunConfig::parse();
    std::process::exit(octovisc::verify::run(&cfg));
}
