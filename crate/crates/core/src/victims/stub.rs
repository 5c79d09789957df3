//! Reference server side of the external victim protocol.

use std::io::{BufRead, Write};

use serde::Deserialize;
use serde_json::json;

use super::external::Hello;
use super::VictimModel;
use crate::types::LatentPoint;

/// How the stub misbehaves, for exercising client error paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StubBehavior {
    #[default]
    Normal,
    /// Appends an extra attribute to every response.
    WrongDimension,
    /// Completes the handshake, then never answers queries.
    Silent,
}

#[derive(Deserialize)]
struct Request {
    id: Option<i64>,
    op: String,
    z: Option<Vec<f64>>,
}

/// Serves `victim` until the reader hits end of input.
pub fn serve_stub<R: BufRead, W: Write>(
    victim: &dyn VictimModel,
    behavior: StubBehavior,
    reader: R,
    mut writer: W,
) -> std::io::Result<()> {
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let reply = match serde_json::from_str::<Request>(&line) {
            Err(e) => json!({ "id": null, "error": format!("bad request: {e}") }),
            Ok(req) if req.op == "hello" => serde_json::to_value(Hello {
                n: victim.latent_dim(),
                m: victim.attribute_count(),
                p: victim.image_dim(),
                heads: victim.heads().to_vec(),
            })
            .expect("hello serializes"),
            Ok(req) if req.op == "query" => {
                if behavior == StubBehavior::Silent {
                    continue;
                }
                let id = req.id.unwrap_or(-1);
                match req.z.map(LatentPoint::new) {
                    None => json!({ "id": id, "error": "missing z" }),
                    Some(Err(e)) => json!({ "id": id, "error": e.to_string() }),
                    Some(Ok(z)) => match victim.query(&z) {
                        Err(e) => json!({ "id": id, "error": e.to_string() }),
                        Ok(q) => {
                            let mut attrs = q.attrs.into_inner();
                            let mut conf = q.confidence;
                            if behavior == StubBehavior::WrongDimension {
                                attrs.push(0.0);
                                conf.push(1.0);
                            }
                            let mut reply = json!({ "id": id, "attrs": attrs, "conf": conf });
                            if let Some(img) = q.image {
                                reply["image"] = json!(img);
                            }
                            reply
                        }
                    },
                }
            }
            Ok(req) => json!({ "id": req.id, "error": format!("unknown op {:?}", req.op) }),
        };
        serde_json::to_writer(&mut writer, &reply)?;
        writer.write_all(b"\n")?;
        writer.flush()?;
    }
    Ok(())
}
