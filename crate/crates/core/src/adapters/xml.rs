//! Minimal XML element tree on top of quick-xml, enough for the exchange
//! formats we read.

use quick_xml::events::{BytesDecl, BytesEnd, BytesStart, BytesText, Event};
use quick_xml::{Reader, Writer};

use super::AdapterError;

#[derive(Debug, Clone, Default)]
pub(crate) struct XmlNode {
    /// Local name, prefix stripped.
    pub name: String,
    /// Qualified attribute names with unescaped values, in document order.
    pub attrs: Vec<(String, String)>,
    pub children: Vec<XmlNode>,
    pub text: String,
}

fn local(qualified: &str) -> &str {
    qualified.rsplit_once(':').map_or(qualified, |(_, l)| l)
}

impl XmlNode {
    /// Attribute by local name; an unprefixed match wins over a prefixed one.
    pub fn attr(&self, name: &str) -> Option<&str> {
        self.attrs
            .iter()
            .find(|(k, _)| k == name)
            .or_else(|| self.attrs.iter().find(|(k, _)| local(k) == name && !k.starts_with("xmlns")))
            .map(|(_, v)| v.as_str())
    }

    pub fn children_named<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a XmlNode> + 'a {
        self.children.iter().filter(move |c| c.name == name)
    }

    pub fn child(&self, name: &str) -> Option<&XmlNode> {
        self.children.iter().find(|c| c.name == name)
    }
}

fn xml_err(e: impl std::fmt::Display) -> AdapterError {
    AdapterError::Xml(e.to_string())
}

fn open(e: &BytesStart<'_>) -> Result<XmlNode, AdapterError> {
    let name = String::from_utf8_lossy(e.local_name().as_ref()).into_owned();
    let mut attrs = Vec::new();
    for a in e.attributes() {
        let a = a.map_err(xml_err)?;
        let key = String::from_utf8_lossy(a.key.as_ref()).into_owned();
        let value = a.unescape_value().map_err(xml_err)?.into_owned();
        attrs.push((key, value));
    }
    Ok(XmlNode { name, attrs, ..XmlNode::default() })
}

/// Parses a document and returns its root element.
pub(crate) fn parse(bytes: &[u8]) -> Result<XmlNode, AdapterError> {
    let mut reader = Reader::from_reader(bytes);
    reader.config_mut().trim_text(true);
    let mut buf = Vec::new();
    let mut stack: Vec<XmlNode> = Vec::new();
    let mut root = None;
    loop {
        let event = reader
            .read_event_into(&mut buf)
            .map_err(|e| AdapterError::Xml(format!("{e} at byte {}", reader.buffer_position())))?;
        let finished = match event {
            Event::Start(e) => {
                stack.push(open(&e)?);
                None
            }
            Event::Empty(e) => Some(open(&e)?),
            Event::End(_) => Some(stack.pop().ok_or_else(|| xml_err("unbalanced end tag"))?),
            Event::Text(t) => {
                if let Some(top) = stack.last_mut() {
                    top.text.push_str(&t.unescape().map_err(xml_err)?);
                }
                None
            }
            Event::CData(t) => {
                if let Some(top) = stack.last_mut() {
                    top.text.push_str(&String::from_utf8_lossy(&t.into_inner()));
                }
                None
            }
            Event::Eof => break,
            _ => None,
        };
        if let Some(node) = finished {
            match stack.last_mut() {
                Some(parent) => parent.children.push(node),
                None if root.is_none() => root = Some(node),
                None => return Err(xml_err("more than one root element")),
            }
        }
        buf.clear();
    }
    if !stack.is_empty() {
        return Err(xml_err("unexpected end of document"));
    }
    root.ok_or_else(|| xml_err("no root element"))
}

/// Indented writer with a UTF-8 declaration.
pub(crate) struct XmlOut {
    w: Writer<Vec<u8>>,
}

impl XmlOut {
    pub fn new() -> Self {
        let mut w = Writer::new_with_indent(Vec::new(), b' ', 2);
        w.write_event(Event::Decl(BytesDecl::new("1.0", Some("UTF-8"), None))).expect("in-memory write");
        Self { w }
    }

    fn start(name: &str, attrs: &[(&str, &str)]) -> BytesStart<'static> {
        let mut s = BytesStart::new(name.to_owned());
        for (k, v) in attrs {
            s.push_attribute((*k, *v));
        }
        s
    }

    pub fn open(&mut self, name: &str, attrs: &[(&str, &str)]) {
        self.w.write_event(Event::Start(Self::start(name, attrs))).expect("in-memory write");
    }

    pub fn close(&mut self, name: &str) {
        self.w.write_event(Event::End(BytesEnd::new(name.to_owned()))).expect("in-memory write");
    }

    pub fn empty(&mut self, name: &str, attrs: &[(&str, &str)]) {
        self.w.write_event(Event::Empty(Self::start(name, attrs))).expect("in-memory write");
    }

    pub fn text_element(&mut self, name: &str, text: &str) {
        self.w.write_event(Event::Start(BytesStart::new(name.to_owned()))).expect("in-memory write");
        self.w.write_event(Event::Text(BytesText::new(text))).expect("in-memory write");
        self.close(name);
    }

    pub fn finish(self) -> Vec<u8> {
        let mut out = self.w.into_inner();
        out.push(b'\n');
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tree_and_attributes() {
        let doc = br#"<?xml version="1.0"?>
            <m:model xmlns:m="urn:x" xmlns:xsi="urn:xsi">
              <element identifier="a1" xsi:type="BusinessActor"><name xml:lang="en">A &amp; B</name></element>
              <empty/>
            </m:model>"#;
        let root = parse(doc).unwrap();
        assert_eq!(root.name, "model");
        let el = root.child("element").unwrap();
        assert_eq!(el.attr("type"), Some("BusinessActor"));
        assert_eq!(el.child("name").unwrap().text, "A & B");
        assert_eq!(root.children.len(), 2);
    }

    #[test]
    fn malformed_input() {
        assert!(parse(b"<a><b></a>").is_err());
        assert!(parse(b"").is_err());
        assert!(parse(b"<a>").is_err());
    }

    #[test]
    fn writer_escapes() {
        let mut w = XmlOut::new();
        w.open("r", &[("name", "a<b")]);
        w.text_element("t", "x & y");
        w.close("r");
        let s = String::from_utf8(w.finish()).unwrap();
        assert!(s.contains(r#"name="a&lt;b""#));
        assert!(s.contains("x &amp; y"));
        assert_eq!(parse(s.as_bytes()).unwrap().child("t").unwrap().text, "x & y");
    }
}
