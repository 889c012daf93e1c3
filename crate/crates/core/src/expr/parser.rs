use super::{BinaryOp, Function, Node, NodeKind, ParseError, ParseErrorKind, UnaryOp};

/// Recursive-descent parser over the byte string.
///
/// ```text
/// expr   := term (('+'|'-') term)*
/// term   := factor (('*'|'/') factor)*
/// factor := unary ('^' factor)?
/// unary  := '-' unary | atom
/// atom   := number | ident | ident '(' expr ')' | '(' expr ')'
/// ```
pub(super) struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    pub(super) fn new(text: &'a str) -> Self {
        Self { src: text.as_bytes(), pos: 0 }
    }

    pub(super) fn parse_all(mut self) -> Result<Node, ParseError> {
        self.skip_ws();
        if self.pos == self.src.len() {
            return Err(self.error(ParseErrorKind::Empty));
        }
        let node = self.expr()?;
        self.skip_ws();
        if self.pos != self.src.len() {
            return Err(self.error(ParseErrorKind::Unexpected(self.src[self.pos] as char)));
        }
        Ok(node)
    }

    fn error(&self, kind: ParseErrorKind) -> ParseError {
        ParseError { offset: self.pos, kind }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            let at = self.pos;
            self.pos += 1;
            let rhs = self.term()?;
            let op = if c == b'+' { BinaryOp::Add } else { BinaryOp::Sub };
            lhs = Node::new(at, NodeKind::Binary(op, Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.factor()?;
        while let Some(c @ (b'*' | b'/')) = self.peek() {
            let at = self.pos;
            self.pos += 1;
            let rhs = self.factor()?;
            let op = if c == b'*' { BinaryOp::Mul } else { BinaryOp::Div };
            lhs = Node::new(at, NodeKind::Binary(op, Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Node, ParseError> {
        let base = self.unary()?;
        if self.peek() == Some(b'^') {
            let at = self.pos;
            self.pos += 1;
            let exp = self.factor()?;
            return Ok(Node::new(at, NodeKind::Binary(BinaryOp::Pow, Box::new(base), Box::new(exp))));
        }
        Ok(base)
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if self.peek() == Some(b'-') {
            let at = self.pos;
            self.pos += 1;
            let inner = self.unary()?;
            return Ok(Node::new(at, NodeKind::Unary(UnaryOp::Neg, Box::new(inner))));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Node, ParseError> {
        match self.peek() {
            None => Err(self.error(ParseErrorKind::UnexpectedEnd)),
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect_close()?;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii identifier");
                if self.peek() == Some(b'(') {
                    let func = Function::from_name(name).ok_or(ParseError {
                        offset: start,
                        kind: ParseErrorKind::UnknownFunction(name.to_string()),
                    })?;
                    self.pos += 1;
                    let arg = self.expr()?;
                    self.expect_close()?;
                    Ok(Node::new(start, NodeKind::Call(func, Box::new(arg))))
                } else {
                    Ok(Node::new(start, NodeKind::Var(name.to_string())))
                }
            }
            Some(c) => Err(self.error(ParseErrorKind::Unexpected(c as char))),
        }
    }

    fn expect_close(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            Some(b')') => {
                self.pos += 1;
                Ok(())
            }
            Some(c) => Err(self.error(ParseErrorKind::Expected(')', c as char))),
            None => Err(self.error(ParseErrorKind::UnexpectedEnd)),
        }
    }

    fn number(&mut self) -> Result<Node, ParseError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut count = digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            count += digits(self);
        }
        if count == 0 {
            return Err(ParseError { offset: start, kind: ParseErrorKind::BadNumber });
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                // "2e" followed by something else: not an exponent
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii number");
        let value: f64 = text
            .parse()
            .map_err(|_| ParseError { offset: start, kind: ParseErrorKind::BadNumber })?;
        Ok(Node::new(start, NodeKind::Const(value)))
    }
}
