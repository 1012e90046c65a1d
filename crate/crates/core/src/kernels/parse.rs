//! Text form of kernel expressions.
//!
//! ```text
//! expr   := term ('+' term)*
//! term   := factor ('*' factor)*
//! factor := '(' expr ')' | leaf
//! leaf   := name '(' [arg (',' arg)*] ')'
//! arg    := number | key '=' number
//! ```
//!
//! Leaves: `const(c)`, `rbf(l=..)`, `matern(l=..,nu=..)`, `rq(l=..,alpha=..)`,
//! `white(noise)`. Parsed parameters get the default bounds, widened to
//! contain the given value.

use super::KernelExpr;
use crate::error::{Error, Result};

pub fn parse_kernel(text: &str) -> Result<KernelExpr> {
    let mut p = Parser {
        s: text.as_bytes(),
        pos: 0,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.s.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::KernelSyntax(format!("{msg} at offset {}", self.pos))
    }

    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        self.skip_ws();
        if self.s.get(self.pos) == Some(&c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(&format!("expected `{}`", c as char)))
        }
    }

    fn expr(&mut self) -> Result<KernelExpr> {
        let mut lhs = self.term()?;
        while self.eat(b'+') {
            lhs = lhs + self.term()?;
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<KernelExpr> {
        let mut lhs = self.factor()?;
        while self.eat(b'*') {
            lhs = lhs * self.factor()?;
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<KernelExpr> {
        if self.eat(b'(') {
            let e = self.expr()?;
            self.expect(b')')?;
            return Ok(e);
        }
        self.leaf()
    }

    fn ident(&mut self) -> Option<String> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.s.len() && (self.s[self.pos].is_ascii_alphanumeric() || self.s[self.pos] == b'_') {
            self.pos += 1;
        }
        (self.pos > start).then(|| String::from_utf8_lossy(&self.s[start..self.pos]).to_lowercase())
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.s.len() && matches!(self.s[self.pos], b'0'..=b'9' | b'.' | b'e' | b'E' | b'-' | b'+') {
            // a sign is only part of the number at the start or after an exponent marker
            if matches!(self.s[self.pos], b'-' | b'+')
                && self.pos > start
                && !matches!(self.s[self.pos - 1], b'e' | b'E')
            {
                break;
            }
            self.pos += 1;
        }
        let text = std::str::from_utf8(&self.s[start..self.pos]).unwrap_or("");
        text.parse().map_err(|_| {
            self.pos = start;
            self.err("expected a number")
        })
    }

    fn args(&mut self) -> Result<Vec<(Option<String>, f64)>> {
        self.expect(b'(')?;
        let mut out = Vec::new();
        if self.eat(b')') {
            return Ok(out);
        }
        loop {
            let save = self.pos;
            let key = match self.ident() {
                Some(k) if self.eat(b'=') => Some(k),
                _ => {
                    self.pos = save;
                    None
                }
            };
            out.push((key, self.number()?));
            if self.eat(b')') {
                return Ok(out);
            }
            self.expect(b',')?;
        }
    }

    fn leaf(&mut self) -> Result<KernelExpr> {
        let name = self.ident().ok_or_else(|| self.err("expected a kernel name"))?;
        let args = self.args()?;
        let spec: &[(&str, &[&str])] = match name.as_str() {
            "const" | "constant" => &[("c", &["c", "value"])],
            "rbf" => &[("l", &["l", "length_scale"])],
            "matern" => &[("l", &["l", "length_scale"]), ("nu", &["nu"])],
            "rq" | "rational_quadratic" => &[("l", &["l", "length_scale"]), ("alpha", &["alpha"])],
            "white" | "wn" => &[("noise", &["noise", "sigma2", "value"])],
            other => return Err(Error::KernelSyntax(format!("unknown kernel `{other}`"))),
        };
        let mut values: Vec<Option<f64>> = vec![None; spec.len()];
        for (i, (key, v)) in args.iter().enumerate() {
            let slot = match key {
                None if i < spec.len() => i,
                None => return Err(Error::KernelSyntax(format!("too many arguments for `{name}`"))),
                Some(k) => spec
                    .iter()
                    .position(|(_, aliases)| aliases.contains(&k.as_str()))
                    .ok_or_else(|| Error::KernelSyntax(format!("`{name}` has no parameter `{k}`")))?,
            };
            if values[slot].replace(*v).is_some() {
                return Err(Error::KernelSyntax(format!("duplicate argument for `{name}`")));
            }
        }
        let get = |slot: usize, default: Option<f64>| {
            values[slot]
                .or(default)
                .ok_or_else(|| Error::KernelSyntax(format!("`{name}` needs `{}`", spec[slot].0)))
        };
        match name.as_str() {
            "const" | "constant" => KernelExpr::constant(get(0, None)?),
            "rbf" => KernelExpr::rbf(get(0, None)?),
            "matern" => KernelExpr::matern(get(0, None)?, get(1, Some(1.5))?),
            "rq" | "rational_quadratic" => KernelExpr::rational_quadratic(get(0, None)?, get(1, Some(1.0))?),
            _ => KernelExpr::white(get(0, None)?),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{ablation_variants, composite_kernel, KernelBounds, KernelTemplate};
    use proptest::prelude::*;

    #[test]
    fn parses_canonical_composite() {
        let k = parse_kernel("const(4.0) * matern(l=1.0,nu=1.5) + white(0.25)").unwrap();
        assert_eq!(
            k,
            composite_kernel(4.0, 1.0, 1.5, 0.25, KernelBounds::default()).unwrap()
        );
        assert_eq!(k.to_string(), "const(4) * matern(l=1,nu=1.5) + white(0.25)");
    }

    #[test]
    fn parses_positional_and_parens() {
        let k = parse_kernel("(rbf(0.5) + rq(l=2, alpha=3)) * const(2)").unwrap();
        assert_eq!(parse_kernel(&k.to_string()).unwrap(), k);
        let k = parse_kernel("matern(1e-1)").unwrap();
        assert_eq!(k.to_string(), "matern(l=0.1,nu=1.5)");
    }

    #[test]
    fn rejects_bad_text() {
        for bad in [
            "",
            "foo(1)",
            "rbf()",
            "rbf(1) +",
            "matern(l=1,nu=2)",
            "const(-1)",
            "white(1) white(2)",
            "rbf(q=1)",
        ] {
            assert!(parse_kernel(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn ablation_variants_round_trip() {
        for (_, k) in ablation_variants(&KernelTemplate::default()).unwrap() {
            assert_eq!(parse_kernel(&k.to_string()).unwrap(), k);
        }
    }

    proptest! {
        #[test]
        fn display_parse_round_trip(c in 1e-3..1e3f64, l in 1e-2..1e2f64, n in 1e-6..1e2f64, a in 1e-2..1e2f64) {
            let k = KernelExpr::constant(c).unwrap() * KernelExpr::rational_quadratic(l, a).unwrap()
                + KernelExpr::rbf(l).unwrap() * (KernelExpr::white(n).unwrap() + KernelExpr::matern(l, 2.5).unwrap());
            let back = parse_kernel(&k.to_string()).unwrap();
            prop_assert_eq!(back, k);
        }
    }
}
