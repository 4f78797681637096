use std::time::Duration;

use thiserror::Error;

pub const TIMEOUT_ENV: &str = "NLOGFLOW_TIMEOUT_MS";
pub const DEFAULT_TIMEOUT_MS: u64 = 30_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0}")]
pub struct TransportError(pub String);

/// Delivers a request envelope and returns the response body.
pub trait Transport: Sync {
    fn post(&self, endpoint: &str, body: &str) -> Result<String, TransportError>;
}

impl<F> Transport for F
where
    F: Fn(&str, &str) -> Result<String, TransportError> + Sync,
{
    fn post(&self, endpoint: &str, body: &str) -> Result<String, TransportError> {
        self(endpoint, body)
    }
}

/// Plain HTTP POST with an empty SOAPAction.
pub struct HttpTransport {
    agent: ureq::Agent,
}

impl HttpTransport {
    pub fn new(timeout: Duration) -> Self {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build();
        HttpTransport { agent: config.into() }
    }

    /// Timeout from `NLOGFLOW_TIMEOUT_MS`, falling back to the default.
    pub fn from_env() -> Self {
        let ms = std::env::var(TIMEOUT_ENV)
            .ok()
            .and_then(|v| v.trim().parse().ok())
            .unwrap_or(DEFAULT_TIMEOUT_MS);
        Self::new(Duration::from_millis(ms))
    }
}

impl Transport for HttpTransport {
    fn post(&self, endpoint: &str, body: &str) -> Result<String, TransportError> {
        let mut resp = self
            .agent
            .post(endpoint)
            .header("Content-Type", "text/xml; charset=utf-8")
            .header("SOAPAction", "\"\"")
            .send(body)
            .map_err(|e| TransportError(format!("POST {endpoint}: {e}")))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| TransportError(format!("POST {endpoint}: reading body: {e}")))?;
        // a 500 carrying a SOAP fault is a service answer, not a transport failure
        if status >= 400 && !text.contains("Fault") {
            return Err(TransportError(format!("POST {endpoint}: HTTP {status}")));
        }
        Ok(text)
    }
}
