use std::collections::HashMap;

use roxmltree::{Document, Node};

use super::IngestError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WsdlOperation {
    pub name: String,
    /// Element QNames exactly as written in the message parts (`tns:local`).
    pub input_element: String,
    pub output_element: String,
    pub fault_element: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WsdlDoc {
    pub target_ns: String,
    pub operations: Vec<WsdlOperation>,
    pub selected: usize,
    pub port_type: String,
    pub endpoint: Option<String>,
}

impl WsdlDoc {
    pub fn operation(&self) -> &WsdlOperation {
        &self.operations[self.selected]
    }
}

fn local_part(qname: &str) -> &str {
    qname.rsplit_once(':').map(|(_, l)| l).unwrap_or(qname)
}

fn children<'a, 'i>(node: Node<'a, 'i>, name: &'a str) -> impl Iterator<Item = Node<'a, 'i>> + 'a {
    node.children()
        .filter(move |c| c.is_element() && c.tag_name().name() == name)
}

/// Parse a WSDL 1.1 document. With several operations, `selector` picks
/// one by name; otherwise the document must declare exactly one.
pub fn parse_wsdl(text: &str, selector: Option<&str>) -> Result<WsdlDoc, IngestError> {
    let doc = Document::parse(text).map_err(|e| IngestError::Xml(e.to_string()))?;
    let root = doc.root_element();

    let mut messages: HashMap<&str, &str> = HashMap::new();
    for msg in root
        .descendants()
        .filter(|n| n.is_element() && n.tag_name().name() == "message")
    {
        let Some(name) = msg.attribute("name") else { continue };
        if let Some(el) = children(msg, "part").find_map(|p| p.attribute("element").or(p.attribute("type"))) {
            messages.insert(name, el);
        }
    }
    let resolve =
        |attr: Option<&str>, op: &str| -> Result<Option<String>, IngestError> {
            match attr {
                None => Ok(None),
                Some(m) => messages.get(local_part(m)).map(|e| Some(e.to_string())).ok_or_else(|| {
                    IngestError::UnresolvedMessage {
                        operation: op.to_string(),
                        message: m.to_string(),
                    }
                }),
            }
        };

    let mut operations = Vec::new();
    let mut port_type = String::new();
    for op in root
        .descendants()
        .filter(|n| n.is_element() && n.tag_name().name() == "operation")
    {
        // binding operations carry no message references
        let Some(input) = children(op, "input").find_map(|i| i.attribute("message")) else {
            continue;
        };
        let name = op.attribute("name").unwrap_or_default().to_string();
        if operations.iter().any(|o: &WsdlOperation| o.name == name) {
            continue;
        }
        let output = children(op, "output").find_map(|o| o.attribute("message"));
        let fault = children(op, "fault").find_map(|f| f.attribute("message"));
        let input_element = resolve(Some(input), &name)?.unwrap_or_default();
        let output_element = resolve(output, &name)?.ok_or_else(|| IngestError::UnresolvedMessage {
            operation: name.clone(),
            message: "<output>".into(),
        })?;
        let fault_element = resolve(fault, &name)?;
        if port_type.is_empty() {
            if let Some(pt) = op.parent_element().filter(|p| p.tag_name().name() == "portType") {
                port_type = pt.attribute("name").unwrap_or_default().to_string();
            }
        }
        operations.push(WsdlOperation {
            name,
            input_element,
            output_element,
            fault_element,
        });
    }

    let selected = match (operations.len(), selector) {
        (0, _) => return Err(IngestError::MissingOperation),
        (_, Some(sel)) => operations
            .iter()
            .position(|o| o.name == sel)
            .ok_or_else(|| IngestError::UnknownOperation(sel.to_string()))?,
        (1, None) => 0,
        (_, None) => {
            return Err(IngestError::AmbiguousOperation(
                operations.iter().map(|o| o.name.clone()).collect(),
            ))
        }
    };

    let endpoint = root
        .descendants()
        .find(|n| n.is_element() && n.tag_name().name() == "address")
        .and_then(|n| n.attribute("location"))
        .map(str::to_string);

    Ok(WsdlDoc {
        target_ns: root.attribute("targetNamespace").unwrap_or_default().to_string(),
        operations,
        selected,
        port_type,
        endpoint,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_OPS: &str = r#"<definitions xmlns="http://schemas.xmlsoap.org/wsdl/" xmlns:tns="urn:t" targetNamespace="urn:t">
  <message name="a"><part name="parameters" element="tns:a"/></message>
  <message name="aResponse"><part name="parameters" element="tns:aResponse"/></message>
  <message name="b"><part name="parameters" element="tns:b"/></message>
  <message name="bResponse"><part name="parameters" element="tns:bResponse"/></message>
  <portType name="p">
    <operation name="a"><input message="tns:a"/><output message="tns:aResponse"/></operation>
    <operation name="b"><input message="tns:b"/><output message="tns:bResponse"/></operation>
  </portType>
  <binding name="pb" type="tns:p">
    <operation name="a"><input/><output/></operation>
  </binding>
</definitions>"#;

    #[test]
    fn selector_picks_operation() {
        let w = parse_wsdl(TWO_OPS, Some("b")).unwrap();
        assert_eq!(w.operations.len(), 2);
        assert_eq!(w.operation().name, "b");
        assert_eq!(w.operation().input_element, "tns:b");
        assert_eq!(w.operation().output_element, "tns:bResponse");
        assert_eq!(w.operation().fault_element, None);
        assert_eq!(w.port_type, "p");
    }

    #[test]
    fn ambiguous_without_selector() {
        assert!(matches!(
            parse_wsdl(TWO_OPS, None),
            Err(IngestError::AmbiguousOperation(ops)) if ops == ["a", "b"]
        ));
        assert!(matches!(
            parse_wsdl(TWO_OPS, Some("zzz")),
            Err(IngestError::UnknownOperation(_))
        ));
    }

    #[test]
    fn zero_operations() {
        let text = r#"<definitions xmlns="http://schemas.xmlsoap.org/wsdl/"><message name="m"/></definitions>"#;
        assert!(matches!(parse_wsdl(text, None), Err(IngestError::MissingOperation)));
    }

    #[test]
    fn malformed_xml() {
        assert!(matches!(parse_wsdl("<definitions>", None), Err(IngestError::Xml(_))));
    }
}
