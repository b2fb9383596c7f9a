//! Blocking JSON-over-HTTP helper shared by the remote providers.

use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;

const TIMEOUT: Duration = Duration::from_secs(60);

#[derive(Debug)]
pub(crate) enum HttpError {
    /// Connection failure, timeout or non-2xx status. Worth retrying.
    Transport(String),
    /// The body was not the expected JSON shape.
    Format(String),
}

pub(crate) fn post_json<B: Serialize, R: DeserializeOwned>(
    url: &str,
    api_key: Option<&str>,
    body: &B,
) -> Result<R, HttpError> {
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(TIMEOUT))
        .build()
        .into();
    let mut req = agent.post(url);
    if let Some(key) = api_key {
        req = req.header("Authorization", &format!("Bearer {key}"));
    }
    let mut resp = req.send_json(body).map_err(|e| match e {
        ureq::Error::Json(e) => HttpError::Format(e.to_string()),
        other => HttpError::Transport(other.to_string()),
    })?;
    resp.body_mut().read_json::<R>().map_err(|e| match e {
        ureq::Error::Json(e) => HttpError::Format(e.to_string()),
        other => HttpError::Transport(other.to_string()),
    })
}

#[cfg(test)]
pub(crate) mod test_server {
    //! One-shot HTTP responder for exercising the remote providers.

    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::sync::mpsc;
    use std::thread;

    /// Serves `responses` in order (one per connection) and forwards each
    /// request body on the returned channel.
    pub fn serve(responses: Vec<(u16, String)>) -> (String, mpsc::Receiver<String>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for (status, body) in responses {
                let (mut stream, _) = listener.accept().unwrap();
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut len = 0usize;
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    let l = line.trim_end();
                    if l.is_empty() {
                        break;
                    }
                    if let Some(v) = l.to_ascii_lowercase().strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap();
                    }
                }
                let mut buf = vec![0u8; len];
                reader.read_exact(&mut buf).unwrap();
                let _ = tx.send(String::from_utf8_lossy(&buf).into_owned());
                let reply = format!(
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                    body.len()
                );
                stream.write_all(reply.as_bytes()).unwrap();
            }
        });
        (format!("http://{addr}/"), rx)
    }
}
