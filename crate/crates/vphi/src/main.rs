use clap::Parser;

fn main() {
    let cli = vphi::cli::Cli::parse();
    let code = vphi::cli::run(cli, &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}
