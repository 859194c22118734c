use clap::Parser;

use terraword_server::{serve, ServerArgs};

#[derive(Parser)]
#[command(name = "terraword-server", about = "Session server for the terraword engine")]
struct Cli {
    #[command(flatten)]
    server: ServerArgs,
}

#[tokio::main]
async fn main() {
    let cli = Cli::parse();
    if let Err(e) = serve(cli.server).await {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
