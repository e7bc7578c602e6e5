use std::collections::BTreeMap;

use super::lexer::{Lexer, Pos, Tok};
use super::{ParseDiagnostic, ParseOutcome, SourceMap};
use crate::diagnostic::{Severity, SourceSpan};
use crate::model::{
    build_model, is_valid_id, Band, ClusterKind, ClusterSpec, ComparativeValue, Development,
    GatewayGuard, Indicator, IndicatorContent, IndicatorType, LevelKind, LevelSpec, Link,
    LinkKind, ModelParts, Operator, OperatorSpec, ResultType, SubTreeRef, TreeCut, Trend, Unit,
    ValueType,
};

const ITEM_KEYWORDS: &[&str] = &[
    "kbi",
    "fin",
    "driver",
    "external",
    "subsidiary",
    "op",
    "level",
    "cluster",
    "subtree",
    "cut",
    "note",
];

const CONTENT_KEYS: &[&str] = &[
    "title",
    "unit",
    "value_type",
    "result",
    "compare",
    "dev",
    "resp",
    "attr",
];

/// Marker for an error that has already been recorded as a diagnostic.
struct Reported;

type PResult<T> = Result<T, Reported>;

struct PendingLink {
    link: Link,
    explicit_order: bool,
}

pub(crate) struct Parser {
    file: String,
    toks: Vec<(Tok, Pos)>,
    idx: usize,
    diagnostics: Vec<ParseDiagnostic>,
    parts: ModelParts,
    links: Vec<PendingLink>,
    spans: SourceMap,
}

impl Parser {
    pub(crate) fn new(source: &str, file: &str) -> Self {
        let (toks, lex_errors) = Lexer::new(source).tokenize();
        let mut parser = Parser {
            file: file.to_string(),
            toks,
            idx: 0,
            diagnostics: Vec::new(),
            parts: ModelParts::default(),
            links: Vec::new(),
            spans: SourceMap {
                file: file.to_string(),
                ..Default::default()
            },
        };
        for e in lex_errors {
            let span = parser.span(e.pos);
            parser.push(Severity::Error, e.code, e.message, span);
        }
        parser
    }

    pub(crate) fn run(mut self) -> ParseOutcome {
        let _ = self.model();
        let has_errors = self
            .diagnostics
            .iter()
            .any(|d| d.severity == Severity::Error);
        if has_errors {
            return ParseOutcome {
                model: None,
                diagnostics: self.diagnostics,
                spans: self.spans,
            };
        }
        self.assign_orders();
        let parts = std::mem::take(&mut self.parts);
        match build_model(parts) {
            Ok(model) => ParseOutcome {
                model: Some(model),
                diagnostics: self.diagnostics,
                spans: self.spans,
            },
            Err(err) => {
                let span = err
                    .subject()
                    .and_then(|id| self.spans.indicators.get(id).cloned())
                    .or_else(|| self.spans.model.clone())
                    .unwrap_or_else(|| self.span(Pos { line: 1, column: 1, len: 0 }));
                self.diagnostics.push(ParseDiagnostic {
                    severity: Severity::Error,
                    code: err.code().to_string(),
                    message: err.to_string(),
                    span,
                });
                ParseOutcome {
                    model: None,
                    diagnostics: self.diagnostics,
                    spans: self.spans,
                }
            }
        }
    }

    /// Links without an explicit order take the next free position among
    /// their target's children, in declaration order.
    fn assign_orders(&mut self) {
        let mut next: BTreeMap<(String, bool), u32> = BTreeMap::new();
        for p in self.links.iter().filter(|p| p.explicit_order) {
            let key = (p.link.target.clone(), p.link.kind.is_analytical());
            let slot = next.entry(key).or_default();
            *slot = (*slot).max(p.link.order + 1);
        }
        for p in &mut self.links {
            if !p.explicit_order {
                let key = (p.link.target.clone(), p.link.kind.is_analytical());
                let slot = next.entry(key).or_default();
                p.link.order = *slot;
                *slot += 1;
            }
        }
        self.parts.links = self.links.drain(..).map(|p| p.link).collect();
    }

    fn span(&self, pos: Pos) -> SourceSpan {
        SourceSpan {
            file: self.file.clone(),
            line: pos.line,
            column: pos.column,
            length: pos.len,
        }
    }

    fn push(&mut self, severity: Severity, code: &str, message: String, span: SourceSpan) {
        self.diagnostics.push(ParseDiagnostic {
            severity,
            code: code.to_string(),
            message,
            span,
        });
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.idx].0
    }

    fn peek_nth(&self, n: usize) -> &Tok {
        let i = (self.idx + n).min(self.toks.len() - 1);
        &self.toks[i].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.idx].1
    }

    fn advance(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.idx].clone();
        if self.idx + 1 < self.toks.len() {
            self.idx += 1;
        }
        t
    }

    fn error_here<T>(&mut self, code: &str, message: String) -> PResult<T> {
        let span = self.span(self.pos());
        self.push(Severity::Error, code, message, span);
        Err(Reported)
    }

    fn expect(&mut self, want: Tok, what: &str) -> PResult<Pos> {
        if *self.peek() == want {
            Ok(self.advance().1)
        } else {
            let found = self.peek().describe();
            self.error_here("P003", format!("expected {what}, found {found}"))
        }
    }

    fn eat(&mut self, want: &Tok) -> bool {
        if self.peek() == want {
            self.advance();
            true
        } else {
            false
        }
    }

    fn ident(&mut self, what: &str) -> PResult<(String, Pos)> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let pos = self.advance().1;
                Ok((s, pos))
            }
            other => self.error_here("P003", format!("expected {what}, found {}", other.describe())),
        }
    }

    /// An identifier naming an indicator.
    fn id(&mut self) -> PResult<(String, Pos)> {
        let (s, pos) = self.ident("indicator id")?;
        if !is_valid_id(&s) {
            let span = self.span(pos);
            self.push(
                Severity::Error,
                "P008",
                format!("`{s}` cannot be used as an indicator id"),
                span,
            );
            return Err(Reported);
        }
        Ok((s, pos))
    }

    fn string(&mut self, what: &str) -> PResult<String> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.advance();
                Ok(s)
            }
            other => self.error_here("P003", format!("expected {what}, found {}", other.describe())),
        }
    }

    fn number(&mut self, what: &str) -> PResult<f64> {
        match self.peek().clone() {
            Tok::Num(n) => {
                self.advance();
                Ok(n)
            }
            other => self.error_here("P003", format!("expected {what}, found {}", other.describe())),
        }
    }

    fn keyword<T: std::str::FromStr>(&mut self, what: &str) -> PResult<T> {
        let (word, pos) = self.ident(what)?;
        match word.parse::<T>() {
            Ok(v) => Ok(v),
            Err(_) => {
                let span = self.span(pos);
                self.push(Severity::Error, "P005", format!("unknown {what} `{word}`"), span);
                Err(Reported)
            }
        }
    }

    fn model(&mut self) -> PResult<()> {
        match self.peek() {
            Tok::Ident(s) if s == "model" => {}
            _ => {
                return self.error_here("P009", "expected `model \"name\" { ... }`".to_string());
            }
        }
        let head = self.advance().1;
        self.spans.model = Some(self.span(head));
        self.parts.name = self.string("model name")?;
        self.expect(Tok::LBrace, "`{`")?;
        loop {
            match self.peek() {
                Tok::RBrace => {
                    self.advance();
                    break;
                }
                Tok::Eof => {
                    return self.error_here("P003", "expected `}` closing the model".to_string());
                }
                _ => {
                    if self.item().is_err() {
                        self.recover();
                    }
                }
            }
        }
        if *self.peek() != Tok::Eof {
            let found = self.peek().describe();
            return self.error_here("P009", format!("unexpected {found} after the model"));
        }
        Ok(())
    }

    fn at_item_start(&self) -> bool {
        match self.peek() {
            Tok::Ident(s) => {
                ITEM_KEYWORDS.contains(&s.as_str())
                    || matches!(
                        self.peek_nth(1),
                        Tok::Direct | Tok::Indirect | Tok::Allocation
                    )
            }
            _ => false,
        }
    }

    /// Skips to the next plausible item start or the model's closing brace.
    fn recover(&mut self) {
        let mut depth = 0usize;
        let start = self.idx;
        loop {
            match self.peek() {
                Tok::Eof => return,
                Tok::RBrace if depth == 0 => return,
                Tok::RBrace => depth -= 1,
                Tok::LBrace => depth += 1,
                _ if depth == 0 && self.idx > start && self.at_item_start() => return,
                _ => {}
            }
            self.advance();
        }
    }

    fn item(&mut self) -> PResult<()> {
        let word = match self.peek() {
            Tok::Ident(s) => s.clone(),
            other => {
                let found = other.describe();
                let err = self.error_here("P003", format!("expected a model item, found {found}"));
                self.advance();
                return err;
            }
        };
        match word.as_str() {
            "kbi" | "fin" | "driver" | "external" | "subsidiary" => self.indicator(),
            "op" => self.operator(),
            "level" => self.level(),
            "cluster" => self.cluster(),
            "subtree" => self.subtree(),
            "cut" => self.treecut(),
            "note" => self.note(),
            _ => self.link(),
        }
    }

    fn indicator(&mut self) -> PResult<()> {
        let itype: IndicatorType = self.keyword("indicator type")?;
        let (id, pos) = self.id()?;
        let span = self.span(pos);
        let mut role = Default::default();
        if self.eat(&Tok::At) {
            let (flag, fpos) = self.ident("role flag")?;
            role = match flag.as_str() {
                "key" => crate::model::FunctionRole::KeyValueIndicator,
                "input" => crate::model::FunctionRole::Input,
                "calc" => crate::model::FunctionRole::Calculation,
                "regular" => crate::model::FunctionRole::Regular,
                _ => {
                    let s = self.span(fpos);
                    self.push(Severity::Error, "P005", format!("unknown role flag `@{flag}`"), s);
                    return Err(Reported);
                }
            };
        }
        self.expect(Tok::LBrace, "`{` opening the indicator body")?;
        let content = self.content(&id);
        if self.spans.indicators.contains_key(&id) {
            // keep the first declaration's span; build_model reports the duplicate
        } else {
            self.spans.indicators.insert(id.clone(), span);
        }
        // body errors are already reported and the closing brace consumed
        let Ok(mut content) = content else {
            return Ok(());
        };
        if content.title.is_empty() {
            content.title = id.clone();
        }
        self.parts.indicators.push(Indicator {
            id,
            itype,
            role,
            content,
        });
        Ok(())
    }

    /// Parses `content_kv*` and the closing brace. Bad entries are reported
    /// and skipped so the rest of the body is still checked.
    fn content(&mut self, id: &str) -> PResult<IndicatorContent> {
        let mut content = IndicatorContent::default();
        let mut failed = false;
        let mut seen: Vec<String> = Vec::new();
        loop {
            while self.eat(&Tok::Comma) || self.eat(&Tok::Semi) {}
            match self.peek().clone() {
                Tok::RBrace => {
                    self.advance();
                    break;
                }
                Tok::Eof => {
                    self.error_here::<()>(
                        "P003",
                        format!("expected `}}` closing indicator `{id}`"),
                    )
                    .ok();
                    return Err(Reported);
                }
                Tok::Ident(key) => {
                    let pos = self.pos();
                    let repeatable = matches!(key.as_str(), "result" | "attr");
                    if !repeatable && seen.contains(&key) {
                        let span = self.span(pos);
                        self.push(
                            Severity::Warning,
                            "P007",
                            format!("`{key}` given twice for `{id}`; the last value wins"),
                            span,
                        );
                    }
                    seen.push(key.clone());
                    if self.content_kv(&key, &mut content, id).is_err() {
                        failed = true;
                        self.skip_content_entry();
                    }
                }
                other => {
                    let found = other.describe();
                    self.error_here::<()>("P003", format!("expected a content key, found {found}"))
                        .ok();
                    failed = true;
                    self.advance();
                    self.skip_content_entry();
                }
            }
        }
        if failed {
            Err(Reported)
        } else {
            Ok(content)
        }
    }

    fn skip_content_entry(&mut self) {
        loop {
            match self.peek() {
                Tok::RBrace | Tok::Eof => return,
                Tok::Ident(s) if CONTENT_KEYS.contains(&s.as_str()) => return,
                _ => {
                    self.advance();
                }
            }
        }
    }

    fn result_type(&mut self) -> PResult<ResultType> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.advance();
                Ok(ResultType::from_name(&s))
            }
            Tok::Ident(s) => {
                let pos = self.advance().1;
                let rt = ResultType::from_name(&s);
                if rt.is_builtin() {
                    Ok(rt)
                } else {
                    let span = self.span(pos);
                    self.push(
                        Severity::Error,
                        "P005",
                        format!("unknown result type `{s}` (quote custom result types)"),
                        span,
                    );
                    Err(Reported)
                }
            }
            other => self.error_here("P003", format!("expected result type, found {}", other.describe())),
        }
    }

    fn content_kv(&mut self, key: &str, content: &mut IndicatorContent, id: &str) -> PResult<()> {
        let key_pos = self.advance().1;
        match key {
            "title" => {
                let title = self.string("title text")?;
                if title.is_empty() {
                    let span = self.span(key_pos);
                    self.push(Severity::Error, "P003", format!("empty title for `{id}`"), span);
                    return Err(Reported);
                }
                content.title = title;
            }
            "unit" => {
                let pos = self.pos();
                let text = self.string("unit expression")?;
                match text.parse::<Unit>() {
                    Ok(u) => content.unit = Some(u),
                    Err(e) => {
                        let span = self.span(pos);
                        self.push(Severity::Error, "P006", format!("invalid unit: {e}"), span);
                        return Err(Reported);
                    }
                }
            }
            "value_type" => content.value_type = Some(self.keyword::<ValueType>("value type")?),
            "result" => {
                let rt = self.result_type()?;
                let v = self.number("result value")?;
                content.results.insert(rt, v);
            }
            "compare" => {
                let rt = self.result_type()?;
                let v = self.number("comparative value")?;
                content.comparative = Some(ComparativeValue {
                    result_type: rt,
                    value: v,
                });
            }
            "dev" => {
                let (word, pos) = self.ident("development")?;
                content.development = Some(match word.as_str() {
                    "derived" => Development::Derived,
                    other => match other.parse::<Trend>() {
                        Ok(t) => Development::Fixed(t),
                        Err(_) => {
                            let span = self.span(pos);
                            self.push(
                                Severity::Error,
                                "P005",
                                format!("unknown development `{other}`"),
                                span,
                            );
                            return Err(Reported);
                        }
                    },
                });
            }
            "resp" => content.responsibility = Some(self.string("responsibility")?),
            "attr" => {
                let k = self.string("attribute name")?;
                let v = self.string("attribute value")?;
                content.data_attributes.insert(k, v);
            }
            other => {
                let span = self.span(key_pos);
                self.push(
                    Severity::Error,
                    "P005",
                    format!("unknown content key `{other}`"),
                    span,
                );
                return Err(Reported);
            }
        }
        Ok(())
    }

    fn link(&mut self) -> PResult<()> {
        let (source, _) = self.id()?;
        let kind = match self.peek() {
            Tok::Direct => LinkKind::DirectAnalytical,
            Tok::Indirect => LinkKind::IndirectAnalytical,
            Tok::Allocation => LinkKind::LogicalAllocation,
            other => {
                let found = other.describe();
                return self.error_here(
                    "P003",
                    format!("expected `->`, `~>` or `..>` after `{source}`, found {found}"),
                );
            }
        };
        self.advance();
        let (target, _) = self.id()?;
        let mut link = Link::new(source, target, kind, 0);
        let mut explicit_order = false;
        if self.eat(&Tok::LBracket) {
            loop {
                let (word, pos) = self.ident("`order`, `when` or `default`")?;
                match word.as_str() {
                    "order" => {
                        self.expect(Tok::Assign, "`=`")?;
                        let npos = self.pos();
                        let n = self.number("order")?;
                        if n < 0.0 || n.fract() != 0.0 || n > u32::MAX as f64 {
                            let span = self.span(npos);
                            self.push(
                                Severity::Error,
                                "P004",
                                format!("order must be a non-negative integer, got {n}"),
                                span,
                            );
                            return Err(Reported);
                        }
                        link.order = n as u32;
                        explicit_order = true;
                    }
                    "default" => link.guard = Some(GatewayGuard::Default),
                    "when" => {
                        let comparator = match self.peek().clone() {
                            Tok::Cmp(c) => {
                                self.advance();
                                c
                            }
                            other => {
                                return self.error_here(
                                    "P003",
                                    format!("expected a comparator, found {}", other.describe()),
                                )
                            }
                        };
                        let threshold = self.number("guard threshold")?;
                        link.guard = Some(GatewayGuard::When {
                            comparator,
                            threshold,
                        });
                    }
                    other => {
                        let span = self.span(pos);
                        self.push(
                            Severity::Error,
                            "P005",
                            format!("unknown link attribute `{other}`"),
                            span,
                        );
                        return Err(Reported);
                    }
                }
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(Tok::RBracket, "`]`")?;
        }
        self.links.push(PendingLink {
            link,
            explicit_order,
        });
        Ok(())
    }

    fn operator(&mut self) -> PResult<()> {
        self.advance();
        let (parent, _) = self.id()?;
        self.expect(Tok::Assign, "`=`")?;
        let op = match self.peek().clone() {
            Tok::Plus => {
                self.advance();
                Operator::Add
            }
            Tok::Minus => {
                self.advance();
                Operator::Subtract
            }
            Tok::Star => {
                self.advance();
                Operator::Multiply
            }
            Tok::Colon => {
                self.advance();
                Operator::Divide
            }
            Tok::Ident(w) if w == "L" => {
                self.advance();
                Operator::Logical
            }
            Tok::Ident(w) if w == "fx" => {
                self.advance();
                self.expect(Tok::LParen, "`(`")?;
                let (name, _) = self.ident("function name")?;
                let mut params = BTreeMap::new();
                while self.eat(&Tok::Comma) {
                    let (k, _) = self.ident("parameter name")?;
                    self.expect(Tok::Assign, "`=`")?;
                    let v = self.number("parameter value")?;
                    params.insert(k, v);
                }
                self.expect(Tok::RParen, "`)`")?;
                Operator::Function { name, params }
            }
            Tok::Ident(w) if w == "X" => {
                self.advance();
                self.expect(Tok::LParen, "`(`")?;
                let (selector, _) = self.id()?;
                self.expect(Tok::RParen, "`)`")?;
                Operator::Gateway { selector }
            }
            other => {
                return self.error_here(
                    "P005",
                    format!("unknown operator {}", other.describe()),
                )
            }
        };
        self.parts.operators.push(OperatorSpec { parent, op });
        Ok(())
    }

    fn id_list(&mut self) -> PResult<Vec<String>> {
        self.expect(Tok::LBracket, "`[`")?;
        let mut ids = Vec::new();
        if self.eat(&Tok::RBracket) {
            return Ok(ids);
        }
        loop {
            ids.push(self.id()?.0);
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(Tok::RBracket, "`]`")?;
        Ok(ids)
    }

    fn level(&mut self) -> PResult<()> {
        self.advance();
        let kind: LevelKind = self.keyword("level kind")?;
        self.expect(Tok::LBrace, "`{`")?;
        let mut bands = Vec::new();
        if !self.eat(&Tok::RBrace) {
            loop {
                let name = self.string("band name")?;
                self.expect(Tok::Colon, "`:`")?;
                let members = self.id_list()?;
                bands.push(Band {
                    name,
                    members: members.into_iter().collect(),
                });
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(Tok::RBrace, "`}`")?;
        }
        self.parts.levels.push(LevelSpec { kind, bands });
        Ok(())
    }

    fn cluster(&mut self) -> PResult<()> {
        self.advance();
        let kind: ClusterKind = self.keyword("cluster kind")?;
        let name = self.string("cluster name")?;
        let attached_to = if self.eat(&Tok::At) {
            Some(self.id()?.0)
        } else {
            None
        };
        let members = self.id_list()?;
        self.parts.clusters.push(ClusterSpec {
            name,
            kind,
            members: members.into_iter().collect(),
            attached_to,
        });
        Ok(())
    }

    fn subtree(&mut self) -> PResult<()> {
        self.advance();
        let (boundary, _) = self.id()?;
        self.expect(Tok::FatArrow, "`=>`")?;
        let model = self.string("model reference")?;
        self.parts
            .decomposition
            .sub_trees
            .push(SubTreeRef { boundary, model });
        Ok(())
    }

    fn treecut(&mut self) -> PResult<()> {
        self.advance();
        let (node, _) = self.id()?;
        self.expect(Tok::FatArrow, "`=>`")?;
        let label = self.string("reference label")?;
        self.parts.decomposition.tree_cuts.push(TreeCut { node, label });
        Ok(())
    }

    fn note(&mut self) -> PResult<()> {
        self.advance();
        let (id, pos) = self.id()?;
        let text = self.string("note text")?;
        if self.parts.annotations.insert(id.clone(), text).is_some() {
            let span = self.span(pos);
            self.push(
                Severity::Warning,
                "P007",
                format!("`{id}` annotated twice; the last note wins"),
                span,
            );
        }
        Ok(())
    }
}
