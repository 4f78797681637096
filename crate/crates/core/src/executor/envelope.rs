//! SOAP envelope codec for jGASW-style services.
//!
//! Requests carry one element per input, each repeating the service
//! namespace. Results wrap every output file in a single
//! `ns1:<operation>Result` element, one unprefixed child per markup.

use std::fmt::Write as _;

use indexmap::IndexMap;
use roxmltree::{Document, Node};
use thiserror::Error;

use crate::semodel::ServiceAnnotation;

pub const SOAP_ENV_NS: &str = "http://schemas.xmlsoap.org/soap/envelope/";
const ENVELOPE_OPEN: &str = "<soapenv:Envelope xmlns:soapenv=\"http://schemas.xmlsoap.org/soap/envelope/\" \
xmlns:xsd=\"http://www.w3.org/2001/XMLSchema\" xmlns:xsi=\"http://www.w3.org/2001/XMLSchema-instance\">";
const ENVELOPE_OPEN_PLAIN: &str = "<soapenv:Envelope xmlns:soapenv=\"http://schemas.xmlsoap.org/soap/envelope/\">";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnvelopeError {
    #[error("no value for input `{0}`")]
    MissingValue(String),
    #[error("service returned a fault: {0}")]
    FaultReceived(String),
    #[error("markup `{0}` is absent from the result")]
    MissingMarkup(String),
    #[error("malformed envelope: {0}")]
    MalformedXml(String),
}

pub fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RequestEnvelope {
    pub operation: String,
    pub namespace: String,
    /// (element name, value) in schema order
    pub children: Vec<(String, String)>,
}

impl RequestEnvelope {
    pub fn render(&self) -> String {
        let ns = escape(&self.namespace);
        let mut out = String::new();
        out.push_str(ENVELOPE_OPEN);
        out.push_str("\n  <soapenv:Body>\n");
        let _ = write!(out, "    <{} xmlns=\"{ns}\">", self.operation);
        out.push('\n');
        for (name, value) in &self.children {
            let _ = writeln!(
                out,
                "      <{name} xsi:type=\"xsd:string\" xmlns=\"{ns}\">{}</{name}>",
                escape(value)
            );
        }
        let _ = writeln!(out, "    </{}>", self.operation);
        out.push_str("  </soapenv:Body>\n</soapenv:Envelope>\n");
        out
    }
}

/// One child of a parsed request, namespace included for validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RequestChild {
    pub name: String,
    pub namespace: Option<String>,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedRequest {
    pub operation: String,
    pub namespace: Option<String>,
    pub children: Vec<RequestChild>,
}

fn body<'a, 'i>(doc: &'a Document<'i>) -> Result<Node<'a, 'i>, EnvelopeError> {
    let root = doc.root_element();
    if root.tag_name().name() != "Envelope" {
        return Err(EnvelopeError::MalformedXml(format!(
            "root element is `{}`, expected Envelope",
            root.tag_name().name()
        )));
    }
    root.children()
        .find(|n| n.is_element() && n.tag_name().name() == "Body")
        .ok_or_else(|| EnvelopeError::MalformedXml("no Body element".into()))
}

pub fn parse_request(text: &str) -> Result<ParsedRequest, EnvelopeError> {
    let doc = Document::parse(text).map_err(|e| EnvelopeError::MalformedXml(e.to_string()))?;
    let body = body(&doc)?;
    let op = body
        .children()
        .find(Node::is_element)
        .ok_or_else(|| EnvelopeError::MalformedXml("empty Body".into()))?;
    Ok(ParsedRequest {
        operation: op.tag_name().name().to_string(),
        namespace: op.tag_name().namespace().map(str::to_string),
        children: op
            .children()
            .filter(Node::is_element)
            .map(|c| RequestChild {
                name: c.tag_name().name().to_string(),
                namespace: c.tag_name().namespace().map(str::to_string),
                value: c.text().unwrap_or_default().trim().to_string(),
            })
            .collect(),
    })
}

/// Request for `s` with `values` keyed by input parameter id. Children
/// follow the grounding's part order.
pub fn build_request(
    s: &ServiceAnnotation,
    values: &IndexMap<String, String>,
) -> Result<RequestEnvelope, EnvelopeError> {
    let mut children = Vec::new();
    for (param, part) in &s.grounding.input_parts {
        let v = values
            .get(param)
            .ok_or_else(|| EnvelopeError::MissingValue(format!("{}.{param}", s.name)))?;
        children.push((part.clone(), v.clone()));
    }
    Ok(RequestEnvelope {
        operation: s.grounding.operation.clone(),
        namespace: s.grounding.namespace.clone(),
        children,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResultEnvelope {
    /// Name of the wrapping element, e.g. `localResult`.
    pub element: String,
    pub namespace: String,
    pub entries: Vec<(String, String)>,
}

impl ResultEnvelope {
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(ENVELOPE_OPEN_PLAIN);
        out.push_str("\n  <soapenv:Body>\n");
        let _ = writeln!(
            out,
            "    <ns1:{} xmlns:ns1=\"{}\">",
            self.element,
            escape(&self.namespace)
        );
        for (markup, value) in &self.entries {
            let _ = writeln!(out, "      <{markup}>{}</{markup}>", escape(value));
        }
        let _ = writeln!(out, "    </ns1:{}>", self.element);
        out.push_str("  </soapenv:Body>\n</soapenv:Envelope>\n");
        out
    }
}

pub fn render_fault(namespace: &str, message: &str) -> String {
    let msg = escape(message);
    let mut out = String::new();
    out.push_str(ENVELOPE_OPEN_PLAIN);
    out.push_str("\n  <soapenv:Body>\n    <soapenv:Fault>\n");
    out.push_str("      <faultcode>soapenv:Server</faultcode>\n");
    let _ = writeln!(out, "      <faultstring>{msg}</faultstring>");
    out.push_str("      <detail>\n");
    let _ = writeln!(out, "        <ns1:SOAPException xmlns:ns1=\"{}\">", escape(namespace));
    let _ = writeln!(out, "          <message>{msg}</message>");
    out.push_str("        </ns1:SOAPException>\n      </detail>\n    </soapenv:Fault>\n");
    out.push_str("  </soapenv:Body>\n</soapenv:Envelope>\n");
    out
}

/// Name of the result wrapper for `s`.
pub fn result_element(s: &ServiceAnnotation) -> String {
    if s.grounding.output_message_part.is_empty() {
        format!("{}Result", s.grounding.operation)
    } else {
        s.grounding.output_message_part.clone()
    }
}

/// Extract every expansion's value by markup. Expansions that carry links
/// must be present; others are simply left out when absent. An output
/// without expansions takes the wrapper's whole text under its own id.
pub fn parse_result(s: &ServiceAnnotation, text: &str) -> Result<IndexMap<String, String>, EnvelopeError> {
    let doc = Document::parse(text).map_err(|e| EnvelopeError::MalformedXml(e.to_string()))?;
    if let Some(fault) = doc
        .descendants()
        .find(|n| n.is_element() && matches!(n.tag_name().name(), "Fault" | "SOAPException"))
    {
        let message = fault
            .descendants()
            .find(|n| n.is_element() && matches!(n.tag_name().name(), "faultstring" | "message"))
            .and_then(|n| n.text())
            .unwrap_or("SOAPException")
            .trim()
            .to_string();
        return Err(EnvelopeError::FaultReceived(message));
    }
    let name = result_element(s);
    let wrapper = doc
        .descendants()
        .find(|n| n.is_element() && n.tag_name().name() == name)
        .ok_or_else(|| EnvelopeError::MalformedXml(format!("no `{name}` element")))?;

    let mut found: IndexMap<&str, String> = IndexMap::new();
    for c in wrapper.children().filter(Node::is_element) {
        found
            .entry(c.tag_name().name())
            .or_insert_with(|| c.text().unwrap_or_default().trim().to_string());
    }

    let mut out = IndexMap::new();
    for o in &s.outputs {
        if o.expands_to.is_empty() {
            let text: String = wrapper.descendants().filter_map(|n| n.text()).collect();
            out.insert(o.base.id.param.clone(), text.trim().to_string());
            continue;
        }
        for n in &o.expands_to {
            match found.get(n.has_id.as_str()) {
                Some(v) => {
                    out.insert(n.has_id.clone(), v.clone());
                }
                None if !n.links.is_empty() => return Err(EnvelopeError::MissingMarkup(n.has_id.clone())),
                None => {}
            }
        }
    }
    Ok(out)
}
