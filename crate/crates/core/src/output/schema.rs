//! A validator for the subset of XML Schema used by `report.xsd`.
//!
//! Supported: one global element; named and inline complex types with a
//! `sequence` of local elements (`minOccurs`, `maxOccurs`) and attributes
//! (`use="required"`); `simpleContent` extensions; named simple types
//! restricting a built-in type with `minLength` and `enumeration`.
//! Built-ins: string, token, nonNegativeInteger, boolean, dateTime.

use std::collections::HashMap;

use roxmltree::{Document, Node};

const XS: &str = "http://www.w3.org/2001/XMLSchema";

#[derive(Debug, thiserror::Error)]
#[error("unsupported schema: {0}")]
pub struct SchemaError(String);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Builtin {
    String,
    NonNegativeInteger,
    Boolean,
    DateTime,
}

#[derive(Clone, Debug)]
struct SimpleType {
    base: Builtin,
    min_length: Option<usize>,
    enumeration: Vec<String>,
}

#[derive(Clone, Debug)]
enum Content {
    Empty,
    Elements(Vec<Particle>),
    Simple(TypeRef),
}

#[derive(Clone, Debug)]
struct ComplexType {
    attributes: Vec<AttributeDecl>,
    content: Content,
}

#[derive(Clone, Debug)]
enum TypeDef {
    Simple(SimpleType),
    Complex(ComplexType),
}

#[derive(Clone, Debug)]
enum TypeRef {
    Builtin(Builtin),
    Named(String),
    Inline(Box<TypeDef>),
}

#[derive(Clone, Debug)]
struct Particle {
    name: String,
    ty: TypeRef,
    min: u32,
    max: Option<u32>,
}

#[derive(Clone, Debug)]
struct AttributeDecl {
    name: String,
    ty: TypeRef,
    required: bool,
}

/// A problem found in an instance document.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SchemaViolation {
    /// `line:column` of the offending node.
    pub location: String,
    /// Name of the element concerned.
    pub element: String,
    pub message: String,
}

#[derive(Clone, Debug)]
pub struct Schema {
    root: Particle,
    types: HashMap<String, TypeDef>,
}

impl Schema {
    pub fn parse(text: &str) -> Result<Schema, SchemaError> {
        let doc = Document::parse(text).map_err(|e| SchemaError(e.to_string()))?;
        let top = doc.root_element();
        if !is_xs(top, "schema") {
            return Err(SchemaError("root is not xs:schema".into()));
        }
        let mut types = HashMap::new();
        let mut root = None;
        for n in top.children().filter(Node::is_element) {
            match n.tag_name().name() {
                "simpleType" | "complexType" => {
                    let name = n.attribute("name").ok_or_else(|| SchemaError("unnamed global type".into()))?;
                    types.insert(name.to_string(), type_def(n)?);
                }
                "element" => {
                    if root.is_some() {
                        return Err(SchemaError("more than one global element".into()));
                    }
                    root = Some(particle(n)?);
                }
                "annotation" => {}
                other => return Err(SchemaError(format!("xs:{other} at top level"))),
            }
        }
        let schema = Schema { root: root.ok_or_else(|| SchemaError("no global element".into()))?, types };
        schema.check_refs()?;
        Ok(schema)
    }

    /// The shipped report schema.
    pub fn report() -> &'static Schema {
        static S: std::sync::OnceLock<Schema> = std::sync::OnceLock::new();
        S.get_or_init(|| Schema::parse(super::REPORT_SCHEMA).expect("shipped schema parses"))
    }

    pub fn root_name(&self) -> &str {
        &self.root.name
    }

    pub fn validate(&self, doc: &Document) -> Vec<SchemaViolation> {
        let mut out = Vec::new();
        let root = doc.root_element();
        if root.tag_name().name() != self.root.name || root.tag_name().namespace().is_some() {
            out.push(violation(root, format!("root element must be <{}>", self.root.name)));
            return out;
        }
        self.element(root, &self.root.ty, &mut out);
        out
    }

    fn check_refs(&self) -> Result<(), SchemaError> {
        let mut pending = vec![&self.root.ty];
        pending.extend(self.types.values().flat_map(refs_of));
        let mut i = 0;
        while i < pending.len() {
            let r = pending[i];
            match r {
                TypeRef::Named(n) if !self.types.contains_key(n) => {
                    return Err(SchemaError(format!("undefined type {n}")));
                }
                TypeRef::Inline(def) => pending.extend(refs_of(def)),
                _ => {}
            }
            i += 1;
        }
        Ok(())
    }

    fn resolve<'s>(&'s self, r: &'s TypeRef) -> Resolved<'s> {
        match r {
            TypeRef::Builtin(b) => Resolved::Builtin(*b),
            TypeRef::Named(n) => match &self.types[n] {
                TypeDef::Simple(s) => Resolved::Simple(s),
                TypeDef::Complex(c) => Resolved::Complex(c),
            },
            TypeRef::Inline(def) => match def.as_ref() {
                TypeDef::Simple(s) => Resolved::Simple(s),
                TypeDef::Complex(c) => Resolved::Complex(c),
            },
        }
    }

    fn element(&self, node: Node, ty: &TypeRef, out: &mut Vec<SchemaViolation>) {
        match self.resolve(ty) {
            Resolved::Builtin(_) | Resolved::Simple(_) => {
                for a in node.attributes() {
                    out.push(violation(node, format!("unexpected attribute {}", a.name())));
                }
                self.text_only(node, ty, out);
            }
            Resolved::Complex(c) => {
                for a in node.attributes() {
                    if a.namespace().is_some() || !c.attributes.iter().any(|d| d.name == a.name()) {
                        out.push(violation(node, format!("unexpected attribute {}", a.name())));
                    }
                }
                for d in &c.attributes {
                    match node.attribute(d.name.as_str()) {
                        None if d.required => {
                            out.push(violation(node, format!("missing required attribute {}", d.name)))
                        }
                        None => {}
                        Some(v) => {
                            if let Err(e) = self.check_value(&d.ty, v) {
                                out.push(violation(node, format!("attribute {}: {e}", d.name)));
                            }
                        }
                    }
                }
                match &c.content {
                    Content::Empty => {
                        if let Some(child) = node.children().find(Node::is_element) {
                            out.push(violation(child, format!("<{}> must be empty", name(node))));
                        }
                        if has_text(node) {
                            out.push(violation(node, "text not allowed".into()));
                        }
                    }
                    Content::Simple(base) => self.text_only(node, base, out),
                    Content::Elements(seq) => {
                        if has_text(node) {
                            out.push(violation(node, "text not allowed in element-only content".into()));
                        }
                        self.sequence(node, seq, out);
                    }
                }
            }
        }
    }

    fn text_only(&self, node: Node, ty: &TypeRef, out: &mut Vec<SchemaViolation>) {
        if let Some(child) = node.children().find(Node::is_element) {
            out.push(violation(child, format!("<{}> may hold text only", name(node))));
            return;
        }
        let text: String = node.children().filter(Node::is_text).filter_map(|t| t.text()).collect();
        if let Err(e) = self.check_value(ty, &text) {
            out.push(violation(node, e));
        }
    }

    fn sequence(&self, node: Node, seq: &[Particle], out: &mut Vec<SchemaViolation>) {
        let children: Vec<Node> = node.children().filter(Node::is_element).collect();
        let mut i = 0;
        for p in seq {
            let mut n = 0u32;
            while i < children.len() && p.max.is_none_or(|m| n < m) && name(children[i]) == p.name {
                self.element(children[i], &p.ty, out);
                n += 1;
                i += 1;
            }
            if n < p.min {
                let at = children.get(i).copied().unwrap_or(node);
                out.push(violation(at, format!("missing <{}> in <{}>", p.name, name(node))));
            }
        }
        for c in &children[i..] {
            out.push(violation(*c, format!("unexpected element <{}> in <{}>", name(*c), name(node))));
        }
    }

    fn check_value(&self, ty: &TypeRef, v: &str) -> Result<(), String> {
        match self.resolve(ty) {
            Resolved::Builtin(b) => check_builtin(b, v),
            Resolved::Simple(s) => {
                check_builtin(s.base, v)?;
                if let Some(min) = s.min_length {
                    if v.chars().count() < min {
                        return Err(format!("value {v:?} shorter than {min}"));
                    }
                }
                if !s.enumeration.is_empty() && !s.enumeration.iter().any(|e| e == v) {
                    return Err(format!("value {v:?} not one of {}", s.enumeration.join(", ")));
                }
                Ok(())
            }
            Resolved::Complex(_) => Err("complex type used for a value".into()),
        }
    }
}

enum Resolved<'s> {
    Builtin(Builtin),
    Simple(&'s SimpleType),
    Complex(&'s ComplexType),
}

fn refs_of(def: &TypeDef) -> Vec<&TypeRef> {
    match def {
        TypeDef::Simple(_) => Vec::new(),
        TypeDef::Complex(c) => {
            let mut v: Vec<&TypeRef> = c.attributes.iter().map(|a| &a.ty).collect();
            match &c.content {
                Content::Empty => {}
                Content::Simple(t) => v.push(t),
                Content::Elements(ps) => v.extend(ps.iter().map(|p| &p.ty)),
            }
            v
        }
    }
}

fn check_builtin(b: Builtin, v: &str) -> Result<(), String> {
    let t = v.trim();
    let ok = match b {
        Builtin::String => true,
        Builtin::NonNegativeInteger => {
            let digits = t.strip_prefix('+').unwrap_or(t);
            !digits.is_empty() && digits.bytes().all(|c| c.is_ascii_digit())
        }
        Builtin::Boolean => matches!(t, "true" | "false" | "1" | "0"),
        Builtin::DateTime => {
            chrono::DateTime::parse_from_rfc3339(t).is_ok()
                || chrono::NaiveDateTime::parse_from_str(t, "%Y-%m-%dT%H:%M:%S%.f").is_ok()
        }
    };
    if ok {
        Ok(())
    } else {
        Err(format!("value {v:?} is not a valid {b:?}"))
    }
}

fn is_xs(n: Node, local: &str) -> bool {
    n.is_element() && n.tag_name().name() == local && n.tag_name().namespace() == Some(XS)
}

fn name<'a>(n: Node<'a, '_>) -> &'a str {
    n.tag_name().name()
}

fn has_text(n: Node) -> bool {
    n.children().any(|c| c.is_text() && c.text().is_some_and(|t| !t.trim().is_empty()))
}

fn violation(n: Node, message: String) -> SchemaViolation {
    let pos = n.document().text_pos_at(n.range().start);
    SchemaViolation { location: format!("{}:{}", pos.row, pos.col), element: name(n).to_string(), message }
}

fn xs_children<'a, 'i>(n: Node<'a, 'i>) -> impl Iterator<Item = Node<'a, 'i>> {
    n.children().filter(|c| c.is_element() && c.tag_name().name() != "annotation")
}

fn type_ref(n: Node, attr: &str) -> Result<TypeRef, SchemaError> {
    let Some(t) = n.attribute(attr) else {
        return Err(SchemaError(format!("xs:{} without {attr}", n.tag_name().name())));
    };
    match t.split_once(':') {
        Some((prefix, local)) if n.lookup_namespace_uri(Some(prefix)) == Some(XS) => Ok(TypeRef::Builtin(builtin(local)?)),
        Some(_) => Err(SchemaError(format!("foreign type {t}"))),
        None => Ok(TypeRef::Named(t.to_string())),
    }
}

fn builtin(local: &str) -> Result<Builtin, SchemaError> {
    Ok(match local {
        "string" | "token" | "normalizedString" => Builtin::String,
        "nonNegativeInteger" => Builtin::NonNegativeInteger,
        "boolean" => Builtin::Boolean,
        "dateTime" => Builtin::DateTime,
        other => return Err(SchemaError(format!("built-in type xs:{other}"))),
    })
}

fn type_def(n: Node) -> Result<TypeDef, SchemaError> {
    if is_xs(n, "simpleType") {
        let r = xs_children(n).next().filter(|c| is_xs(*c, "restriction"));
        let r = r.ok_or_else(|| SchemaError("simpleType without restriction".into()))?;
        let TypeRef::Builtin(base) = type_ref(r, "base")? else {
            return Err(SchemaError("restriction of a named type".into()));
        };
        let mut s = SimpleType { base, min_length: None, enumeration: Vec::new() };
        for f in xs_children(r) {
            let value = f.attribute("value").ok_or_else(|| SchemaError("facet without value".into()))?;
            match f.tag_name().name() {
                "minLength" => {
                    s.min_length = Some(value.parse().map_err(|_| SchemaError(format!("minLength {value}")))?)
                }
                "enumeration" => s.enumeration.push(value.to_string()),
                other => return Err(SchemaError(format!("facet xs:{other}"))),
            }
        }
        return Ok(TypeDef::Simple(s));
    }
    if !is_xs(n, "complexType") {
        return Err(SchemaError(format!("xs:{} as a type", n.tag_name().name())));
    }
    let mut c = ComplexType { attributes: Vec::new(), content: Content::Empty };
    for child in xs_children(n) {
        match child.tag_name().name() {
            "sequence" => c.content = Content::Elements(xs_children(child).map(particle).collect::<Result<_, _>>()?),
            "attribute" => c.attributes.push(attribute(child)?),
            "simpleContent" => {
                let ext = xs_children(child).next().filter(|e| is_xs(*e, "extension"));
                let ext = ext.ok_or_else(|| SchemaError("simpleContent without extension".into()))?;
                c.content = Content::Simple(type_ref(ext, "base")?);
                for a in xs_children(ext) {
                    c.attributes.push(attribute(a)?);
                }
            }
            other => return Err(SchemaError(format!("xs:{other} in complexType"))),
        }
    }
    Ok(TypeDef::Complex(c))
}

fn particle(n: Node) -> Result<Particle, SchemaError> {
    if !is_xs(n, "element") {
        return Err(SchemaError(format!("xs:{} in sequence", n.tag_name().name())));
    }
    let name = n.attribute("name").ok_or_else(|| SchemaError("element without name".into()))?.to_string();
    let ty = match xs_children(n).next() {
        Some(inline) => TypeRef::Inline(Box::new(type_def(inline)?)),
        None => type_ref(n, "type")?,
    };
    let occurs = |a: &str, default: Option<u32>| -> Result<Option<u32>, SchemaError> {
        match n.attribute(a) {
            None => Ok(default),
            Some("unbounded") => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| SchemaError(format!("{a}={v}"))),
        }
    };
    let min = occurs("minOccurs", Some(1))?.ok_or_else(|| SchemaError("minOccurs unbounded".into()))?;
    let max = occurs("maxOccurs", Some(1))?;
    Ok(Particle { name, ty, min, max })
}

fn attribute(n: Node) -> Result<AttributeDecl, SchemaError> {
    if !is_xs(n, "attribute") {
        return Err(SchemaError(format!("xs:{} where an attribute was expected", n.tag_name().name())));
    }
    let name = n.attribute("name").ok_or_else(|| SchemaError("attribute without name".into()))?.to_string();
    Ok(AttributeDecl { name, ty: type_ref(n, "type")?, required: n.attribute("use") == Some("required") })
}
