//! The annotation HTTP service on a synthetic data root.
//!
//! By default the example starts the service on a free port, issues one
//! request against it and exits. Pass `--serve` to keep it running.
//!
//! ```text
//! cargo run --example annotation_server -- --serve
//! ```

use tokio::io::{AsyncReadExt, AsyncWriteExt};
use trackbox::server::{bind, ServerConfig};
use trackbox::synth::write_sequence;

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let keep = std::env::args().any(|a| a == "--serve");
    let root = tempfile::tempdir()?;
    write_sequence(&root.path().join("demo"), "demo", 10, 5, 11)?;

    let mut config = ServerConfig::new(root.path());
    config.port = if keep { 8080 } else { 0 };
    let (addr, run) = bind(&config).await?;
    println!("listening on http://{addr}");
    if keep {
        run.await?;
        return Ok(());
    }
    let server = tokio::spawn(run);

    let mut stream = tokio::net::TcpStream::connect(addr).await?;
    stream
        .write_all(b"GET /api/sequences HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n")
        .await?;
    let mut reply = String::new();
    stream.read_to_string(&mut reply).await?;
    let body = reply.split("\r\n\r\n").nth(1).unwrap_or_default();
    println!("GET /api/sequences\n{body}");
    server.abort();
    Ok(())
}
