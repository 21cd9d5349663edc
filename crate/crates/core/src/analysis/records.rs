use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::AnalysisError;

/// One finished game between two named players.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameRecord {
    pub red: String,
    pub black: String,
    /// 1 red win, 0 draw, -1 black win.
    pub score_red: i8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub red_elo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub black_elo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moves: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
}

impl GameRecord {
    pub fn new(red: &str, black: &str, score_red: i8) -> GameRecord {
        GameRecord {
            red: red.to_owned(),
            black: black.to_owned(),
            score_red,
            red_elo: None,
            black_elo: None,
            moves: None,
            timestamp: None,
        }
    }

    pub fn with_elo(mut self, red_elo: f64, black_elo: f64) -> GameRecord {
        self.red_elo = Some(red_elo);
        self.black_elo = Some(black_elo);
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(-1..=1).contains(&self.score_red) {
            return Err(format!("score_red {} not in {{-1, 0, 1}}", self.score_red));
        }
        if self.red.is_empty() || self.black.is_empty() {
            return Err("empty player id".into());
        }
        for e in [self.red_elo, self.black_elo].into_iter().flatten() {
            if !e.is_finite() {
                return Err(format!("non-finite rating {e}"));
            }
        }
        Ok(())
    }
}

/// Reads JSON-lines records, skipping blank lines. Errors carry the 1-based
/// line number.
pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Vec<GameRecord>, AnalysisError> {
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: GameRecord = serde_json::from_str(&line).map_err(|e| AnalysisError::Record {
            line: n + 1,
            message: e.to_string(),
        })?;
        rec.validate().map_err(|message| AnalysisError::Record { line: n + 1, message })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn write_jsonl<W: Write>(mut writer: W, records: &[GameRecord]) -> Result<(), AnalysisError> {
    for r in records {
        serde_json::to_writer(&mut writer, r).map_err(|e| AnalysisError::Record {
            line: 0,
            message: e.to_string(),
        })?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_round_trip() {
        let recs = vec![
            GameRecord::new("a", "b", 1).with_elo(1510.0, 1490.5),
            GameRecord {
                moves: Some(vec!["h2e2".into()]),
                ..GameRecord::new("b", "a", -1)
            },
        ];
        let mut buf = Vec::new();
        write_jsonl(&mut buf, &recs).unwrap();
        assert_eq!(read_jsonl(&buf[..]).unwrap(), recs);
    }

    #[test]
    fn bad_lines_are_located() {
        let text = "{\"red\":\"a\",\"black\":\"b\",\"score_red\":0}\n\n{\"red\":\"a\",\"black\":\"b\",\"score_red\":2}\n";
        match read_jsonl(text.as_bytes()) {
            Err(AnalysisError::Record { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }
}
