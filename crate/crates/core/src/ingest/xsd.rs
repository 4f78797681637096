use std::collections::HashSet;

use indexmap::IndexMap;
use roxmltree::{Document, Node};

use super::IngestError;

pub const XS_NS: &str = "http://www.w3.org/2001/XMLSchema";

const BUILTINS: &[&str] = &[
    "string",
    "anyURI",
    "int",
    "integer",
    "long",
    "boolean",
    "double",
    "float",
    "decimal",
    "dateTime",
    "base64Binary",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ElementType {
    Builtin(String),
    Complex(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XsdElement {
    pub name: String,
    pub ty: ElementType,
    pub nillable: bool,
    pub min_occurs: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct XsdSchema {
    pub target_ns: Option<String>,
    /// Named complex types in declaration order; anonymous ones are keyed
    /// `owner.element`.
    pub complex_types: IndexMap<String, Vec<XsdElement>>,
    /// Top-level element declarations: element name -> complex type name.
    pub elements: IndexMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeafField {
    pub path: Vec<String>,
    pub name: String,
    pub xsd_type: String,
}

impl XsdSchema {
    /// Complex type carried by a message element (`tns:local`).
    pub fn element_type(&self, qname: &str) -> Result<&str, IngestError> {
        let local = qname.rsplit_once(':').map(|(_, l)| l).unwrap_or(qname);
        if let Some(t) = self.elements.get(local) {
            return Ok(t);
        }
        self.complex_types
            .get_key_value(local)
            .map(|(k, _)| k.as_str())
            .ok_or_else(|| IngestError::UnknownType(local.to_string()))
    }
}

fn is_xs(node: &Node, name: &str) -> bool {
    node.is_element() && node.tag_name().name() == name
}

fn resolve_type(node: Node, qname: &str) -> ElementType {
    let (prefix, local) = match qname.split_once(':') {
        Some((p, l)) => (Some(p), l),
        None => (None, qname),
    };
    let ns = node.lookup_namespace_uri(prefix);
    let builtin = match ns {
        Some(ns) => ns == XS_NS,
        None => matches!(prefix, Some("xs") | Some("xsd")),
    };
    if builtin {
        ElementType::Builtin(local.to_string())
    } else {
        ElementType::Complex(local.to_string())
    }
}

/// Parse every `schema` element of a document (a bare XSD or a WSDL with a
/// `types` section).
pub fn parse_xsd(text: &str) -> Result<XsdSchema, IngestError> {
    let doc = Document::parse(text).map_err(|e| IngestError::Xml(e.to_string()))?;
    let mut schema = XsdSchema::default();
    let schemas: Vec<_> = doc.descendants().filter(|n| is_xs(n, "schema")).collect();
    if schemas.is_empty() {
        return Err(IngestError::Xml("no xs:schema element found".into()));
    }
    for s in schemas {
        if schema.target_ns.is_none() {
            schema.target_ns = s.attribute("targetNamespace").map(str::to_string);
        }
        for child in s.children().filter(Node::is_element) {
            match child.tag_name().name() {
                "complexType" => {
                    let name = child
                        .attribute("name")
                        .ok_or_else(|| IngestError::UnsupportedConstruct("anonymous top-level complexType".into()))?;
                    let elements = parse_complex(child, name, &mut schema)?;
                    schema.complex_types.insert(name.to_string(), elements);
                }
                "element" => {
                    let name = child
                        .attribute("name")
                        .ok_or_else(|| IngestError::UnsupportedConstruct("element ref".into()))?;
                    if let Some(t) = child.attribute("type") {
                        match resolve_type(child, t) {
                            ElementType::Complex(t) => {
                                schema.elements.insert(name.to_string(), t);
                            }
                            ElementType::Builtin(_) => {
                                return Err(IngestError::UnsupportedConstruct(format!(
                                    "simple-typed message element `{name}`"
                                )))
                            }
                        }
                    } else if let Some(ct) = child.children().find(|c| is_xs(c, "complexType")) {
                        let elements = parse_complex(ct, name, &mut schema)?;
                        schema.complex_types.insert(name.to_string(), elements);
                        schema.elements.insert(name.to_string(), name.to_string());
                    }
                }
                "annotation" | "import" | "include" => {}
                other => return Err(IngestError::UnsupportedConstruct(other.to_string())),
            }
        }
    }
    Ok(schema)
}

fn parse_complex(node: Node, owner: &str, schema: &mut XsdSchema) -> Result<Vec<XsdElement>, IngestError> {
    let mut out = Vec::new();
    for child in node.children().filter(Node::is_element) {
        match child.tag_name().name() {
            "annotation" => {}
            "sequence" => {
                for el in child.children().filter(Node::is_element) {
                    match el.tag_name().name() {
                        "element" => out.push(parse_element(el, owner, schema)?),
                        "annotation" => {}
                        other => return Err(IngestError::UnsupportedConstruct(other.to_string())),
                    }
                }
            }
            other => return Err(IngestError::UnsupportedConstruct(other.to_string())),
        }
    }
    Ok(out)
}

fn parse_element(el: Node, owner: &str, schema: &mut XsdSchema) -> Result<XsdElement, IngestError> {
    let name = el
        .attribute("name")
        .ok_or_else(|| IngestError::UnsupportedConstruct("element ref".into()))?
        .to_string();
    let ty = match el.attribute("type") {
        Some(t) => resolve_type(el, t),
        None => match el.children().find(|c| is_xs(c, "complexType")) {
            Some(ct) => {
                let synthetic = format!("{owner}.{name}");
                let elements = parse_complex(ct, &synthetic, schema)?;
                schema.complex_types.insert(synthetic.clone(), elements);
                ElementType::Complex(synthetic)
            }
            None => return Err(IngestError::UnsupportedConstruct(format!("untyped element `{name}`"))),
        },
    };
    Ok(XsdElement {
        name,
        ty,
        nillable: el.attribute("nillable") == Some("true"),
        min_occurs: el.attribute("minOccurs").and_then(|m| m.parse().ok()).unwrap_or(1),
    })
}

/// Depth-first, document-order leaves of `type_name`.
pub fn flatten_type(schema: &XsdSchema, type_name: &str) -> Result<Vec<LeafField>, IngestError> {
    fn walk(
        schema: &XsdSchema,
        type_name: &str,
        path: &mut Vec<String>,
        stack: &mut Vec<String>,
        out: &mut Vec<LeafField>,
    ) -> Result<(), IngestError> {
        if stack.iter().any(|t| t == type_name) {
            let mut chain = stack.clone();
            chain.push(type_name.to_string());
            return Err(IngestError::Recursion(chain));
        }
        let elements = schema
            .complex_types
            .get(type_name)
            .ok_or_else(|| IngestError::UnknownType(type_name.to_string()))?;
        stack.push(type_name.to_string());
        for el in elements {
            path.push(el.name.clone());
            match &el.ty {
                ElementType::Builtin(b) => {
                    if !BUILTINS.contains(&b.as_str()) {
                        return Err(IngestError::UnknownType(format!("xs:{b}")));
                    }
                    out.push(LeafField {
                        path: path.clone(),
                        name: el.name.clone(),
                        xsd_type: b.clone(),
                    });
                }
                ElementType::Complex(t) => walk(schema, t, path, stack, out)?,
            }
            path.pop();
        }
        stack.pop();
        Ok(())
    }

    let mut out = Vec::new();
    walk(schema, type_name, &mut Vec::new(), &mut Vec::new(), &mut out)?;
    let mut names = HashSet::new();
    for leaf in &out {
        if !names.insert(leaf.name.as_str()) {
            return Err(IngestError::DuplicateLeafName(leaf.name.clone()));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema(body: &str) -> String {
        format!(
            r#"<xs:schema xmlns:xs="http://www.w3.org/2001/XMLSchema" xmlns:tns="urn:t" targetNamespace="urn:t">{body}</xs:schema>"#
        )
    }

    // Independent oracle: walk the raw XML tree instead of the parsed schema.
    fn oracle_leaves(text: &str, type_name: &str) -> Vec<String> {
        let doc = Document::parse(text).unwrap();
        fn go(doc: &Document, t: &str, out: &mut Vec<String>) {
            let ct = doc
                .descendants()
                .find(|n| n.tag_name().name() == "complexType" && n.attribute("name") == Some(t))
                .unwrap();
            for el in ct.descendants().filter(|n| n.tag_name().name() == "element") {
                let ty = el.attribute("type").unwrap();
                if ty.starts_with("xs:") {
                    out.push(el.attribute("name").unwrap().to_string());
                } else {
                    go(doc, ty.split(':').nth(1).unwrap(), out);
                }
            }
        }
        let mut out = Vec::new();
        go(&doc, type_name, &mut out);
        out
    }

    const NESTED: &str = r#"
      <xs:complexType name="A"><xs:sequence>
        <xs:element name="x" type="xs:string"/>
        <xs:element name="b" type="tns:B"/>
      </xs:sequence></xs:complexType>
      <xs:complexType name="B"><xs:sequence>
        <xs:element name="y" type="xs:anyURI"/>
        <xs:element name="c" type="tns:C"/>
        <xs:element name="z" type="xs:string"/>
      </xs:sequence></xs:complexType>
      <xs:complexType name="C"><xs:sequence>
        <xs:element name="w" type="xs:string"/>
      </xs:sequence></xs:complexType>"#;

    #[test]
    fn three_level_nesting() {
        let text = schema(NESTED);
        let s = parse_xsd(&text).unwrap();
        assert_eq!(s.complex_types.keys().collect::<Vec<_>>(), ["A", "B", "C"]);
        let leaves = flatten_type(&s, "A").unwrap();
        let names: Vec<_> = leaves.iter().map(|l| l.name.clone()).collect();
        assert_eq!(names, oracle_leaves(&text, "A"));
        assert_eq!(names, ["x", "y", "w", "z"]);
        assert_eq!(leaves[2].path, ["b", "c", "w"]);
        for l in &leaves {
            assert_eq!(l.path.last(), Some(&l.name));
        }
    }

    #[test]
    fn two_level_nesting() {
        let text = schema(
            r#"<xs:complexType name="A"><xs:sequence><xs:element name="x" type="xs:string"/>
               <xs:element name="b" type="tns:B"/></xs:sequence></xs:complexType>
               <xs:complexType name="B"><xs:sequence><xs:element name="y" type="xs:string"/>
               <xs:element name="z" type="xs:string"/></xs:sequence></xs:complexType>"#,
        );
        let s = parse_xsd(&text).unwrap();
        let names: Vec<_> = flatten_type(&s, "A").unwrap().into_iter().map(|l| l.name).collect();
        assert_eq!(names, ["x", "y", "z"]);
    }

    #[test]
    fn flat_type_equals_element_list() {
        let s = parse_xsd(&schema(NESTED)).unwrap();
        let leaves = flatten_type(&s, "C").unwrap();
        let elements: Vec<_> = s.complex_types["C"].iter().map(|e| e.name.clone()).collect();
        assert_eq!(leaves.into_iter().map(|l| l.name).collect::<Vec<_>>(), elements);
    }

    #[test]
    fn choice_is_unsupported() {
        let text = schema(
            r#"<xs:complexType name="A"><xs:choice><xs:element name="x" type="xs:string"/></xs:choice></xs:complexType>"#,
        );
        assert!(matches!(parse_xsd(&text), Err(IngestError::UnsupportedConstruct(c)) if c == "choice"));
        let text = schema(r#"<xs:complexType name="A"><xs:attribute name="x"/></xs:complexType>"#);
        assert!(matches!(parse_xsd(&text), Err(IngestError::UnsupportedConstruct(c)) if c == "attribute"));
    }

    #[test]
    fn recursion_is_rejected() {
        let text = schema(
            r#"<xs:complexType name="A"><xs:sequence><xs:element name="b" type="tns:B"/></xs:sequence></xs:complexType>
               <xs:complexType name="B"><xs:sequence><xs:element name="a" type="tns:A"/></xs:sequence></xs:complexType>"#,
        );
        let s = parse_xsd(&text).unwrap();
        assert!(matches!(flatten_type(&s, "A"), Err(IngestError::Recursion(chain)) if chain == ["A", "B", "A"]));
    }

    #[test]
    fn duplicate_leaf_names_are_rejected() {
        let text = schema(
            r#"<xs:complexType name="A"><xs:sequence><xs:element name="stdout" type="xs:string"/>
               <xs:element name="b" type="tns:B"/></xs:sequence></xs:complexType>
               <xs:complexType name="B"><xs:sequence><xs:element name="stdout" type="xs:string"/></xs:sequence></xs:complexType>"#,
        );
        let s = parse_xsd(&text).unwrap();
        assert!(matches!(flatten_type(&s, "A"), Err(IngestError::DuplicateLeafName(n)) if n == "stdout"));
    }

    #[test]
    fn unknown_types() {
        let s = parse_xsd(&schema(NESTED)).unwrap();
        assert!(matches!(flatten_type(&s, "Nope"), Err(IngestError::UnknownType(_))));
        let text = schema(
            r#"<xs:complexType name="A"><xs:sequence><xs:element name="q" type="xs:QName"/></xs:sequence></xs:complexType>"#,
        );
        let s = parse_xsd(&text).unwrap();
        assert!(matches!(flatten_type(&s, "A"), Err(IngestError::UnknownType(_))));
    }

    #[test]
    fn anonymous_inner_types() {
        let text = schema(
            r#"<xs:element name="op"><xs:complexType><xs:sequence>
                 <xs:element name="r"><xs:complexType><xs:sequence>
                   <xs:element name="a" type="xs:string"/></xs:sequence></xs:complexType></xs:element>
               </xs:sequence></xs:complexType></xs:element>"#,
        );
        let s = parse_xsd(&text).unwrap();
        assert_eq!(s.element_type("tns:op").unwrap(), "op");
        let leaves = flatten_type(&s, "op").unwrap();
        assert_eq!(leaves[0].path, ["r", "a"]);
    }
}
