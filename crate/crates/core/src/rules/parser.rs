use std::collections::HashSet;

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::ParseError;
use crate::model::{Accessor, AssignAccessor, TypeFilter, ValueExpression, ValueSegment};

/// Parses a rule file. Rule names must be unique.
pub fn parse_rule_set(text: &str) -> Result<RuleSet, ParseError> {
    let tokens = tokenize(text)?;
    let mut p = Parser::new(tokens, text);
    let mut rules: Vec<TransformationRule> = Vec::new();
    let mut seen = HashSet::new();
    while !p.at_end() {
        let rule = p.rule()?;
        if !seen.insert(rule.name.clone()) {
            return Err(ParseError::DuplicateRule { name: rule.name, location: rule.location });
        }
        rules.push(rule);
    }
    Ok(RuleSet { name: String::new(), rules })
}

/// Parses a standalone value expression such as `"Pool: " + A.name`.
pub fn parse_value_expression(text: &str) -> Result<ValueExpression, ParseError> {
    let mut p = Parser::new(tokenize(text)?, text);
    let expr = p.value_expr()?;
    if !p.at_end() {
        return Err(p.unexpected("end of expression"));
    }
    Ok(expr)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    end: Location,
}

impl Parser {
    fn new(tokens: Vec<Token>, text: &str) -> Self {
        let line = text.lines().count().max(1);
        let column = text.lines().last().map_or(0, |l| l.chars().count()) + 1;
        Self { tokens, pos: 0, end: Location { line, column } }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    fn peek_at(&self, offset: usize) -> Option<&Tok> {
        self.tokens.get(self.pos + offset).map(|t| &t.tok)
    }

    fn location(&self) -> Location {
        self.tokens.get(self.pos).map_or(self.end, |t| t.at)
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        let found = self.peek().map_or_else(|| "end of input".to_owned(), Tok::describe);
        ParseError::syntax(self.location(), format!("expected {expected}, found {found}"))
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if self.eat(&tok) {
            Ok(())
        } else {
            Err(self.unexpected(what))
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == kw)
    }

    fn keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.is_keyword(kw) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{kw}`")))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.unexpected(what)),
        }
    }

    fn string(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Str(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.unexpected(what)),
        }
    }

    fn type_name(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) | Some(Tok::Str(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.unexpected("type name")),
        }
    }

    fn rule(&mut self) -> Result<TransformationRule, ParseError> {
        let location = self.location();
        self.keyword("rule")?;
        self.expect(Tok::LParen, "`(`")?;
        let name = self.ident("rule name")?;
        self.expect(Tok::Colon, "`:`")?;
        let source = self.source_term()?;
        self.expect(Tok::Arrow, "`->`")?;
        let target = self.target_term()?;
        self.expect(Tok::RParen, "`)` closing the rule")?;
        Ok(TransformationRule { name, source, target, location })
    }

    fn source_term(&mut self) -> Result<SourceTerm, ParseError> {
        match self.peek() {
            Some(Tok::Ident(kw)) if kw == "element" => Ok(SourceTerm::Element(self.source_element()?)),
            Some(Tok::Ident(kw)) if kw == "relation" => self.source_relationship(),
            Some(Tok::Ident(kw)) if kw == "group" => self.source_group(),
            _ => Err(self.unexpected("`element`, `relation` or `group`")),
        }
    }

    fn source_element(&mut self) -> Result<SourceElement, ParseError> {
        self.keyword("element")?;
        self.expect(Tok::LParen, "`(`")?;
        let param = self.ident("parameter name")?;
        self.expect(Tok::Colon, "`:`")?;
        let type_filter = self.type_filter()?;
        self.expect(Tok::RParen, "`)`")?;
        let (conditions, constraints) = self.conditions()?;
        Ok(SourceElement { param, type_filter, conditions, constraints })
    }

    fn type_filter(&mut self) -> Result<TypeFilter, ParseError> {
        if self.eat(&Tok::Star) {
            Ok(TypeFilter::Any)
        } else {
            Ok(TypeFilter::Named(self.type_name()?))
        }
    }

    fn source_relationship(&mut self) -> Result<SourceTerm, ParseError> {
        self.keyword("relation")?;
        self.expect(Tok::LParen, "`(`")?;
        let param = self.ident("parameter name")?;
        self.expect(Tok::Colon, "`:`")?;
        let type_filter = self.type_filter()?;
        self.expect(Tok::Comma, "`,`")?;
        let source = self.source_element()?;
        self.expect(Tok::Arrow, "`->`")?;
        let target = self.source_element()?;
        self.expect(Tok::RParen, "`)`")?;
        let (conditions, constraints) = self.conditions()?;
        Ok(SourceTerm::Relationship(SourceRelationship {
            param,
            type_filter,
            source,
            target,
            conditions,
            constraints,
        }))
    }

    fn source_group(&mut self) -> Result<SourceTerm, ParseError> {
        self.keyword("group")?;
        self.expect(Tok::LParen, "`(`")?;
        let op = match self.ident("`AND`, `OR` or `XOR`")?.as_str() {
            "AND" => LogicOp::And,
            "OR" => LogicOp::Or,
            "XOR" => LogicOp::Xor,
            _ => {
                self.pos -= 1;
                return Err(self.unexpected("`AND`, `OR` or `XOR`"));
            }
        };
        self.expect(Tok::Colon, "`:`")?;
        let mut children = vec![self.source_term()?];
        while self.eat(&Tok::Comma) {
            children.push(self.source_term()?);
        }
        if children.len() < 2 {
            return Err(self.unexpected("`,` (groups need at least two terms)"));
        }
        self.expect(Tok::RParen, "`)`")?;
        Ok(SourceTerm::Group(SourceGroup { op, children }))
    }

    fn conditions(&mut self) -> Result<(Vec<SearchCondition>, Vec<LoopConstraint>), ParseError> {
        let mut conditions = Vec::new();
        let mut constraints = Vec::new();
        loop {
            if self.eat(&Tok::LBracket) {
                conditions.push(self.search_condition()?);
                self.expect(Tok::RBracket, "`]`")?;
            } else if self.peek() == Some(&Tok::LBrace)
                && matches!(self.peek_at(1), Some(Tok::Ident(s)) if s == "count")
            {
                self.pos += 2;
                let op = match self.peek() {
                    Some(Tok::Ge) => CountOp::AtLeast,
                    Some(Tok::Gt) => CountOp::MoreThan,
                    Some(Tok::Eq) => CountOp::Exactly,
                    Some(Tok::Lt) => CountOp::LessThan,
                    Some(Tok::Le) => CountOp::AtMost,
                    _ => return Err(self.unexpected("count operator")),
                };
                self.pos += 1;
                let count = match self.peek() {
                    Some(Tok::Int(n)) => *n,
                    _ => return Err(self.unexpected("integer")),
                };
                self.pos += 1;
                self.expect(Tok::RBrace, "`}`")?;
                constraints.push(LoopConstraint { op, count });
            } else {
                return Ok((conditions, constraints));
            }
        }
    }

    fn search_condition(&mut self) -> Result<SearchCondition, ParseError> {
        let accessor = match self.ident("condition accessor")?.as_str() {
            "name" => ConditionAccessor::Name,
            "namespace" => ConditionAccessor::Namespace,
            "tag" => ConditionAccessor::Tag,
            "attribute" => {
                self.expect(Tok::LParen, "`(`")?;
                let key = self.string("attribute key")?;
                self.expect(Tok::RParen, "`)`")?;
                ConditionAccessor::Attribute(key)
            }
            _ => {
                self.pos -= 1;
                return Err(self.unexpected("`name`, `namespace`, `tag` or `attribute(..)`"));
            }
        };
        let op = match self.peek() {
            Some(Tok::Eq) => CompareOp::Eq,
            Some(Tok::Ne) => CompareOp::Ne,
            Some(Tok::Ident(s)) if s == "contains" => CompareOp::Contains,
            Some(Tok::Ident(s)) if s == "matches" => CompareOp::Matches,
            _ => return Err(self.unexpected("`=`, `!=`, `contains` or `matches`")),
        };
        self.pos += 1;
        let value = self.string("string literal")?;
        Ok(SearchCondition { accessor, op, value })
    }

    fn target_term(&mut self) -> Result<TargetTerm, ParseError> {
        match self.peek() {
            Some(Tok::Ident(kw)) if kw == "element" => self.target_element(),
            Some(Tok::Ident(kw)) if kw == "relation" => self.target_relation(),
            Some(Tok::Ident(kw)) if kw == "group" => {
                self.pos += 1;
                self.expect(Tok::LParen, "`(`")?;
                let mut children = vec![self.target_term()?];
                while self.eat(&Tok::Comma) {
                    children.push(self.target_term()?);
                }
                if children.len() < 2 {
                    return Err(self.unexpected("`,` (groups need at least two terms)"));
                }
                self.expect(Tok::RParen, "`)`")?;
                Ok(TargetTerm::Group(children))
            }
            Some(Tok::Ident(kw)) if kw == "enrich" => {
                self.pos += 1;
                self.expect(Tok::LParen, "`(`")?;
                let refs = self.ref_union()?;
                self.expect(Tok::RParen, "`)`")?;
                if self.peek() != Some(&Tok::LBrace) {
                    return Err(self.unexpected("`{` with assignments"));
                }
                let assignments = self.assignments()?;
                Ok(TargetTerm::Enrich(Enrichment { refs, assignments }))
            }
            _ => Err(self.unexpected("`element`, `relation`, `group` or `enrich`")),
        }
    }

    fn target_element(&mut self) -> Result<TargetTerm, ParseError> {
        self.keyword("element")?;
        self.expect(Tok::LParen, "`(`")?;
        let param = self.ident("parameter name")?;
        self.expect(Tok::Colon, "`:`")?;
        let kind = if self.eat(&Tok::Star) {
            self.expect(Tok::LeftArrow, "`<-` and the references supplying the placeholder")?;
            TargetKind::Placeholder(self.ref_union()?)
        } else {
            TargetKind::Create(self.type_name()?)
        };
        self.expect(Tok::RParen, "`)`")?;
        let assignments = self.optional_assignments()?;
        let intermediate = self.intermediate();
        Ok(TargetTerm::Element(TargetElement { param, kind, assignments, intermediate }))
    }

    fn target_relation(&mut self) -> Result<TargetTerm, ParseError> {
        self.keyword("relation")?;
        self.expect(Tok::LParen, "`(`")?;
        let param = self.ident("parameter name")?;
        self.expect(Tok::Colon, "`:`")?;
        let type_name = self.type_name()?;
        self.expect(Tok::Comma, "`,`")?;
        let source = self.end_ref()?;
        self.expect(Tok::Arrow, "`->`")?;
        let target = self.end_ref()?;
        self.expect(Tok::RParen, "`)`")?;
        let assignments = self.optional_assignments()?;
        let intermediate = self.intermediate();
        Ok(TargetTerm::Relation(TargetRelation {
            param,
            type_name,
            source,
            target,
            assignments,
            intermediate,
        }))
    }

    fn intermediate(&mut self) -> bool {
        if self.is_keyword("intermediate") {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn end_ref(&mut self) -> Result<EndRef, ParseError> {
        if self.is_keyword("ref") && self.peek_at(1) == Some(&Tok::LParen) {
            Ok(EndRef::Refs(self.ref_union()?))
        } else {
            Ok(EndRef::Param(self.ident("parameter or `ref(..)`")?))
        }
    }

    fn ref_union(&mut self) -> Result<Vec<TransformationReference>, ParseError> {
        let mut refs = vec![self.reference()?];
        while self.eat(&Tok::Pipe) {
            refs.push(self.reference()?);
        }
        Ok(refs)
    }

    fn reference(&mut self) -> Result<TransformationReference, ParseError> {
        self.keyword("ref")?;
        self.expect(Tok::LParen, "`(`")?;
        let rule = self.ident("rule name")?;
        let output = if self.eat(&Tok::Dot) { Some(self.ident("output parameter")?) } else { None };
        let mut args = Vec::new();
        while self.eat(&Tok::Comma) {
            let first = self.ident("argument parameter")?;
            if self.eat(&Tok::Eq) {
                let caller = self.ident("caller parameter")?;
                args.push(RefArg::Named { callee: first, caller });
            } else {
                args.push(RefArg::Positional(first));
            }
        }
        self.expect(Tok::RParen, "`)`")?;
        Ok(TransformationReference { rule, output, args })
    }

    fn optional_assignments(&mut self) -> Result<Vec<Assignment>, ParseError> {
        if self.peek() == Some(&Tok::LBrace) {
            self.assignments()
        } else {
            Ok(Vec::new())
        }
    }

    fn assignments(&mut self) -> Result<Vec<Assignment>, ParseError> {
        self.expect(Tok::LBrace, "`{`")?;
        let mut out = Vec::new();
        if self.eat(&Tok::RBrace) {
            return Ok(out);
        }
        loop {
            let accessor = match self.ident("assignment target")?.as_str() {
                "name" => AssignAccessor::Name,
                "namespace" => AssignAccessor::Namespace,
                "tag" => AssignAccessor::Tag,
                "attribute" => {
                    self.expect(Tok::LParen, "`(`")?;
                    let key = self.string("attribute key")?;
                    self.expect(Tok::RParen, "`)`")?;
                    AssignAccessor::Attribute(key)
                }
                _ => {
                    self.pos -= 1;
                    return Err(self.unexpected("`name`, `namespace`, `tag` or `attribute(..)`"));
                }
            };
            self.expect(Tok::Eq, "`=`")?;
            let value = self.value_expr()?;
            out.push(Assignment { accessor, value });
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(Tok::RBrace, "`}`")?;
        Ok(out)
    }

    fn value_expr(&mut self) -> Result<ValueExpression, ParseError> {
        let mut segments = vec![self.value_segment()?];
        while self.eat(&Tok::Plus) {
            segments.push(self.value_segment()?);
        }
        Ok(ValueExpression { segments })
    }

    fn value_segment(&mut self) -> Result<ValueSegment, ParseError> {
        if let Some(Tok::Str(s)) = self.peek() {
            let s = s.clone();
            self.pos += 1;
            return Ok(ValueSegment::Literal(s));
        }
        let param = self.ident("string literal or `Param.accessor`")?;
        self.expect(Tok::Dot, "`.`")?;
        let accessor = match self.ident("accessor")?.as_str() {
            "name" => Accessor::Name,
            "id" => Accessor::Id,
            "namespace" => Accessor::Namespace,
            "attribute" => {
                self.expect(Tok::LParen, "`(`")?;
                let key = self.string("attribute key")?;
                self.expect(Tok::RParen, "`)`")?;
                Accessor::Attribute(key)
            }
            "tag" => {
                self.expect(Tok::LParen, "`(`")?;
                let label = self.string("tag label")?;
                self.expect(Tok::RParen, "`)`")?;
                Accessor::Tag(label)
            }
            _ => {
                self.pos -= 1;
                return Err(self.unexpected("`name`, `id`, `namespace`, `attribute(..)` or `tag(..)`"));
            }
        };
        Ok(ValueSegment::Path { param, accessor })
    }
}
