//! Game and tensor files (JSON).
//!
//! Game file: `{"A": [[..]], "S": [[..]], "c": 0.3, "name": ".."}`, with
//! an optional `"c_range": [lo, hi]` for range commands. Tensor file:
//! `{"r": [[[..]]], "name": ".."}` indexed `[state][row][column]`. Unknown
//! keys are rejected.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::SwitchGame;
use crate::generalgamma::GeneralGame;
use crate::linalg::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameFile {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "S")]
    pub s: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_range: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorFile {
    pub r: Vec<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

fn parse_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| {
        Error::Parse(format!("line {}, column {}: {e}", e.line(), e.column()))
    })
}

impl GameFile {
    pub fn parse(text: &str) -> Result<Self> {
        let file: GameFile = parse_json(text)?;
        if let Some([lo, hi]) = file.c_range {
            if !(lo >= 0.0 && lo < hi && hi.is_finite()) {
                return Err(Error::Parse(format!("c_range must satisfy 0 <= lo < hi, got [{lo}, {hi}]")));
            }
        }
        if let Some(c) = file.c {
            if !(c >= 0.0 && c.is_finite()) {
                return Err(Error::Parse(format!("c must be finite and >= 0, got {c}")));
            }
        }
        Ok(file)
    }

    /// The game, with every rule violation listed (one-based entries).
    pub fn game(&self) -> Result<SwitchGame> {
        let game = SwitchGame::unchecked(
            Matrix::from_rows(self.a.clone())?,
            Matrix::from_rows(self.s.clone())?,
        )?;
        let violations = game.validate();
        if violations.is_empty() {
            Ok(game)
        } else {
            let list: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
            Err(Error::Structural(list.join("; ")))
        }
    }

    pub fn from_game(game: &SwitchGame, name: Option<String>) -> Self {
        GameFile {
            a: game.payoffs().to_rows(),
            s: game.switching().to_rows(),
            c: None,
            c_range: None,
            name,
        }
    }
}

impl TensorFile {
    pub fn parse(text: &str) -> Result<Self> {
        parse_json(text)
    }

    pub fn game(&self) -> Result<GeneralGame> {
        GeneralGame::new(self.r.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_a_game() {
        let f = GameFile::parse(r#"{"A": [[1, 0], [0, 1]], "S": [[0, 1], [1, 0]], "c": 0.5, "name": "id"}"#)
            .unwrap();
        assert_eq!(f.c, Some(0.5));
        assert_eq!(f.game().unwrap().n(), 2);
    }

    #[test]
    fn unknown_key_is_rejected_with_position() {
        let err = GameFile::parse("{\n  \"A\": [[1]],\n  \"S\": [[0]],\n  \"cost\": 1\n}").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 4"), "{msg}");
        assert!(msg.contains("cost"), "{msg}");
    }

    #[test]
    fn violations_are_listed() {
        let f = GameFile::parse(r#"{"A": [[1, 0]], "S": [[1, -1], [1, 0]]}"#).unwrap();
        let msg = f.game().unwrap_err().to_string();
        assert!(msg.contains("S[1,1]") && msg.contains("S[1,2]"), "{msg}");
    }

    #[test]
    fn bad_costs_are_rejected() {
        assert!(GameFile::parse(r#"{"A": [[1]], "S": [[0]], "c": -1}"#).is_err());
        assert!(GameFile::parse(r#"{"A": [[1]], "S": [[0]], "c_range": [1, 0]}"#).is_err());
    }

    #[test]
    fn reads_a_tensor() {
        let t = TensorFile::parse(r#"{"r": [[[1, 0]], [[0, 1]]]}"#).unwrap();
        assert_eq!(t.game().unwrap().states(), 2);
        assert!(TensorFile::parse(r#"{"r": [[[1, 0]]], "extra": 1}"#).is_err());
    }
}
