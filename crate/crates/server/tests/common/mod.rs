#![allow(dead_code)]

use std::io::Write;
use std::path::Path;

use lfg_core::ingest::{Catalog, ItemMeta};
use lfg_core::representatives::{FactorRepresentatives, RepresentativeEntry, RepresentativeSet};
use lfg_server::Snapshot;

/// Factor `f` is represented by items `f*100 .. f*100 + per_factor`.
pub fn snapshot(version: u64, k: usize, per_factor: usize) -> Snapshot {
    let reps = RepresentativeSet {
        factors: (0..k)
            .map(|f| FactorRepresentatives {
                factor: f,
                threshold: 0.0,
                pool_size: per_factor,
                undersized: false,
                entries: (0..per_factor)
                    .map(|i| RepresentativeEntry {
                        item_id: (f * 100 + i) as u64,
                        popularity: 1.0,
                        relevance: 1.0,
                        specificity: 1.0,
                        score: 1.0,
                    })
                    .collect(),
            })
            .collect(),
    };
    let mut catalog = Catalog::default();
    for f in 0..k {
        for i in 0..per_factor {
            let id = (f * 100 + i) as u64;
            catalog
                .insert(ItemMeta {
                    item_id: id,
                    title: format!("Movie {id}"),
                    poster_url: String::new(),
                    plot: format!("Plot of movie {id}"),
                    cast: vec!["Someone".into()],
                    director: "Somebody".into(),
                    rating_count: 0,
                })
                .unwrap();
        }
    }
    Snapshot::new(version, reps, catalog)
}

/// Small ratings file with two planted taste groups, plus a catalog covering
/// every item unless `drop_item` names one to leave out.
pub fn write_inputs(dir: &Path, drop_item: Option<u64>) -> (std::path::PathBuf, std::path::PathBuf) {
    let ratings = dir.join("ratings.csv");
    let mut f = std::fs::File::create(&ratings).unwrap();
    writeln!(f, "userId,movieId,rating,timestamp").unwrap();
    for u in 0..40u64 {
        for i in 0..30u64 {
            if (u * 7 + i * 3) % 5 == 0 {
                continue;
            }
            let likes = (u % 2 == 0) == (i < 15);
            let r = if likes { 4.5 } else { 1.5 } + ((u + i) % 3) as f64 * 0.5 - 0.5;
            writeln!(f, "{u},{},{r},{}", 1000 + i, u * 100 + i).unwrap();
        }
    }
    let catalog = dir.join("catalog.jsonl");
    let mut c = std::fs::File::create(&catalog).unwrap();
    for i in 0..30u64 {
        if Some(1000 + i) == drop_item {
            continue;
        }
        writeln!(c, "{{\"item_id\":{},\"title\":\"Film {i}\",\"plot\":\"p\"}}", 1000 + i).unwrap();
    }
    (ratings, catalog)
}

pub mod net {
    use std::net::SocketAddr;
    use std::sync::Arc;
    use std::time::Duration;

    use futures_util::{SinkExt, StreamExt};
    use tokio::net::TcpStream;
    use tokio_tungstenite::tungstenite::Message;
    use tokio_tungstenite::{connect_async, MaybeTlsStream, WebSocketStream};

    use lfg_server::protocol::ServerMessage;
    use lfg_server::AppState;

    pub async fn start(state: Arc<AppState>) -> SocketAddr {
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
        let addr = listener.local_addr().unwrap();
        tokio::spawn(lfg_server::serve(listener, state, Duration::from_millis(10)));
        addr
    }

    /// Test client that keeps a transcript of every frame it received.
    pub struct Client {
        ws: WebSocketStream<MaybeTlsStream<TcpStream>>,
        pub transcript: Vec<String>,
    }

    impl Client {
        pub async fn connect(addr: SocketAddr) -> Self {
            let (ws, _) = connect_async(format!("ws://{addr}/ws")).await.unwrap();
            Self { ws, transcript: Vec::new() }
        }

        pub async fn send(&mut self, msg: serde_json::Value) {
            self.ws.send(Message::text(msg.to_string())).await.unwrap();
        }

        pub async fn recv(&mut self) -> ServerMessage {
            loop {
                let frame = tokio::time::timeout(Duration::from_secs(5), self.ws.next())
                    .await
                    .expect("server reply within 5 s")
                    .expect("connection open")
                    .unwrap();
                if let Message::Text(text) = frame {
                    self.transcript.push(text.to_string());
                    return serde_json::from_str(text.as_str()).unwrap();
                }
            }
        }

        pub async fn close(mut self) -> Vec<String> {
            let _ = self.ws.close(None).await;
            self.transcript
        }
    }
}
