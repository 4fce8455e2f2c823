use casemix_service::{app, port_from_env};

#[tokio::main]
async fn main() -> std::io::Result<()> {
    let addr = std::net::SocketAddr::from(([0, 0, 0, 0], port_from_env()));
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on {addr}");
    axum::serve(listener, app()).await
}
