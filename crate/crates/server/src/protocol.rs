//! JSON messages exchanged with game clients, one message per WebSocket frame.

use serde::{Deserialize, Serialize};

use lfg_core::ingest::ItemMeta;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClientMessage {
    JoinQueue { name: String },
    Guess { game_id: String, round_id: String, term: String },
    Skip { game_id: String, round_id: String },
    Leave,
}

/// What a client sees of one item. Factor ids never leave the server.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemCard {
    pub title: String,
    pub poster_url: String,
    pub plot: String,
    pub cast: Vec<String>,
    pub director: String,
}

impl From<&ItemMeta> for ItemCard {
    fn from(meta: &ItemMeta) -> Self {
        Self {
            title: meta.title.clone(),
            poster_url: meta.poster_url.clone(),
            plot: meta.plot.clone(),
            cast: meta.cast.clone(),
            director: meta.director.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoundEndOutcome {
    Match,
    Skipped,
    Expired,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GameEndReason {
    Time,
    PartnerLeft,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Queued,
    GameStart {
        game_id: String,
        ends_at: u64,
        partner_name: String,
    },
    RoundStart {
        round_id: String,
        items: Vec<ItemCard>,
    },
    GuessAck {
        term: String,
    },
    PartnerActivity {
        guess_count: u32,
    },
    RoundEnd {
        outcome: RoundEndOutcome,
        term: Option<String>,
        points_delta: i64,
    },
    SkipPending,
    GameEnd {
        total_points: i64,
        match_count: u32,
        reason: GameEndReason,
    },
    Error {
        code: String,
        message: String,
    },
}

impl ServerMessage {
    pub fn error(code: &str, message: impl Into<String>) -> Self {
        ServerMessage::Error {
            code: code.to_string(),
            message: message.into(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_client_messages() {
        let m: ClientMessage = serde_json::from_str(r#"{"type":"join_queue","name":"LuckyGuy"}"#).unwrap();
        assert_eq!(m, ClientMessage::JoinQueue { name: "LuckyGuy".into() });
        let m: ClientMessage =
            serde_json::from_str(r#"{"type":"guess","game_id":"g1","round_id":"0","term":"action"}"#).unwrap();
        assert!(matches!(m, ClientMessage::Guess { .. }));
        let m: ClientMessage = serde_json::from_str(r#"{"type":"leave"}"#).unwrap();
        assert_eq!(m, ClientMessage::Leave);
    }

    #[test]
    fn rejects_off_schema_messages() {
        for bad in [
            r#"{"type":"guess","game_id":"g1","term":"x"}"#,
            r#"{"type":"join_queue","name":"a","extra":1}"#,
            r#"{"type":"chat","text":"hi"}"#,
            r#"{"name":"a"}"#,
            "not json",
        ] {
            assert!(serde_json::from_str::<ClientMessage>(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn server_messages_follow_wire_names() {
        let v = serde_json::to_value(ServerMessage::RoundEnd {
            outcome: RoundEndOutcome::Skipped,
            term: None,
            points_delta: -20,
        })
        .unwrap();
        assert_eq!(v, serde_json::json!({"type":"round_end","outcome":"skipped","term":null,"points_delta":-20}));
        let v = serde_json::to_value(ServerMessage::GameEnd {
            total_points: 80,
            match_count: 1,
            reason: GameEndReason::PartnerLeft,
        })
        .unwrap();
        assert_eq!(v["reason"], "partner_left");
        assert_eq!(serde_json::to_value(ServerMessage::SkipPending).unwrap(), serde_json::json!({"type":"skip_pending"}));
    }
}
