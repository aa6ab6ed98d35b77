//! Plain-text report: `#` header comments, then `[section]` blocks of
//! `key = value` lines separated by blank lines.

use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Section {
    pub name: String,
    pub entries: Vec<(String, String)>,
}

impl Section {
    pub fn new(name: &str) -> Self {
        Self { name: name.to_owned(), entries: Vec::new() }
    }

    pub fn push(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.entries.push((key.to_owned(), value.to_string()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Report {
    /// Header comment lines without the leading `# `. Not part of the body.
    pub comments: Vec<String>,
    pub sections: Vec<Section>,
}

impl Report {
    pub fn sections_named<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a Section> + 'a {
        self.sections.iter().filter(move |s| s.name == name)
    }

    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }

    /// Everything except the header comments.
    pub fn body(&self) -> String {
        let mut out = String::new();
        for (i, s) in self.sections.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            let _ = writeln!(out, "[{}]", s.name);
            for (k, v) in &s.entries {
                let _ = writeln!(out, "{k} = {v}");
            }
        }
        out
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.comments {
            let _ = writeln!(out, "# {c}");
        }
        out + &self.body()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut report = Report::default();
        for (i, raw) in text.lines().enumerate() {
            let line = (i + 1) as u64;
            let err = |message: &str| Error::Parse { line, message: message.to_owned() };
            if raw.is_empty() {
                continue;
            }
            if let Some(c) = raw.strip_prefix('#') {
                if !report.sections.is_empty() {
                    return Err(err("comments are only allowed before the first section"));
                }
                report.comments.push(c.strip_prefix(' ').unwrap_or(c).to_owned());
            } else if let Some(name) = raw.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
                report.sections.push(Section::new(name));
            } else if let Some((k, v)) = raw.split_once(" = ") {
                let section = report.sections.last_mut().ok_or_else(|| err("entry before any section"))?;
                section.entries.push((k.to_owned(), v.to_owned()));
            } else {
                return Err(err("expected `[section]` or `key = value`"));
            }
        }
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn render_and_parse() {
        let mut s = Section::new("run");
        s.push("name", "uniform-4").push("improvement", "0.375000");
        let r = Report { comments: vec!["generated 0".into()], sections: vec![s, Section::new("empty")] };
        let text = r.render();
        assert_eq!(text, "# generated 0\n[run]\nname = uniform-4\nimprovement = 0.375000\n\n[empty]\n");
        assert_eq!(Report::parse(&text).unwrap(), r);
        assert_eq!(r.section("run").unwrap().get("improvement"), Some("0.375000"));
    }

    #[test]
    fn parse_errors_carry_line() {
        assert!(matches!(Report::parse("k = v\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(Report::parse("[a]\nnonsense\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(Report::parse("[a]\n# late\n"), Err(Error::Parse { line: 2, .. })));
    }

    proptest! {
        #[test]
        fn render_parse_render_is_identical(
            comments in proptest::collection::vec("[ -~]{0,20}", 0..3),
            sections in proptest::collection::vec(
                ("[a-z_]{1,8}", proptest::collection::vec(("[a-z_]{1,8}", "[!-~][ -~]{0,15}"), 0..5)), 0..4),
        ) {
            let r = Report {
                comments,
                sections: sections.into_iter().map(|(name, entries)| Section { name, entries }).collect(),
            };
            let text = r.render();
            let back = Report::parse(&text).unwrap();
            prop_assert_eq!(back.render(), text);
        }
    }
}
