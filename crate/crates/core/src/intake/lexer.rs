use std::io::{self, Read};

/// Why lexing stopped early.
pub(crate) enum LexError {
    Io(io::Error),
    Encoding(usize),
    Malformed(String),
}

/// Char-at-a-time reader that never pulls more bytes from the underlying
/// reader than the chars it hands out.
struct Chars<R> {
    inner: R,
    pushed: Option<char>,
    consumed: usize,
}

impl<R: Read> Chars<R> {
    fn byte(&mut self) -> Result<Option<u8>, LexError> {
        let mut b = [0u8; 1];
        loop {
            match self.inner.read(&mut b) {
                Ok(0) => return Ok(None),
                Ok(_) => {
                    self.consumed += 1;
                    return Ok(Some(b[0]));
                }
                Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
                Err(e) => return Err(LexError::Io(e)),
            }
        }
    }

    fn next(&mut self) -> Result<Option<char>, LexError> {
        if let Some(c) = self.pushed.take() {
            return Ok(Some(c));
        }
        let at = self.consumed;
        let Some(first) = self.byte()? else { return Ok(None) };
        let len = match first {
            0x00..=0x7F => return Ok(Some(first as char)),
            0xC2..=0xDF => 2,
            0xE0..=0xEF => 3,
            0xF0..=0xF4 => 4,
            _ => return Err(LexError::Encoding(at)),
        };
        let mut buf = [first, 0, 0, 0];
        for slot in buf.iter_mut().take(len).skip(1) {
            *slot = self.byte()?.ok_or(LexError::Encoding(at))?;
        }
        match std::str::from_utf8(&buf[..len]) {
            Ok(s) => Ok(s.chars().next()),
            Err(_) => Err(LexError::Encoding(at)),
        }
    }

    fn push(&mut self, c: char) {
        debug_assert!(self.pushed.is_none());
        self.pushed = Some(c);
    }
}

fn ident_start(c: char) -> bool {
    c == '_' || c == '$' || c.is_alphabetic()
}

fn ident_part(c: char) -> bool {
    ident_start(c) || c.is_alphanumeric()
}

enum Trivia {
    Char(char),
    Eof,
    /// End of input inside a block comment.
    OpenComment,
}

/// Reads the package clause, if the first declaration is one.
pub(crate) fn package_of<R: Read>(reader: R) -> Result<Option<String>, LexError> {
    let mut lx = Chars { inner: reader, pushed: None, consumed: 0 };
    loop {
        let c = match skip_trivia(&mut lx)? {
            Trivia::Char(c) => c,
            Trivia::Eof | Trivia::OpenComment => return Ok(None),
        };
        if c == '@' {
            if !skip_annotation(&mut lx)? {
                return Ok(None);
            }
            continue;
        }
        if !ident_start(c) {
            return Ok(None);
        }
        let word = read_ident(&mut lx, c)?;
        if word != "package" {
            return Ok(None);
        }
        return package_clause(&mut lx).map(Some);
    }
}

fn skip_trivia<R: Read>(lx: &mut Chars<R>) -> Result<Trivia, LexError> {
    loop {
        let Some(c) = lx.next()? else { return Ok(Trivia::Eof) };
        match c {
            '\u{feff}' if lx.consumed == 3 => {}
            c if c.is_whitespace() || c == '\u{000c}' => {}
            '/' => match lx.next()? {
                Some('/') => loop {
                    match lx.next()? {
                        None => return Ok(Trivia::Eof),
                        Some('\n') | Some('\r') => break,
                        Some(_) => {}
                    }
                },
                Some('*') => {
                    let mut star = false;
                    loop {
                        match lx.next()? {
                            None => return Ok(Trivia::OpenComment),
                            Some('/') if star => break,
                            Some(c) => star = c == '*',
                        }
                    }
                }
                Some(other) => {
                    lx.push(other);
                    return Ok(Trivia::Char('/'));
                }
                None => return Ok(Trivia::Char('/')),
            },
            c => return Ok(Trivia::Char(c)),
        }
    }
}

fn read_ident<R: Read>(lx: &mut Chars<R>, first: char) -> Result<String, LexError> {
    let mut s = String::from(first);
    while let Some(c) = lx.next()? {
        if ident_part(c) {
            s.push(c);
        } else {
            lx.push(c);
            break;
        }
    }
    Ok(s)
}

/// Skips `@Name`, `@a.b.Name` and an optional parenthesised argument list.
/// Returns false for `@interface` (an annotation type, not an annotation).
fn skip_annotation<R: Read>(lx: &mut Chars<R>) -> Result<bool, LexError> {
    let mut expect_ident = true;
    loop {
        let c = match skip_trivia(lx)? {
            Trivia::Char(c) => c,
            _ => return Ok(false),
        };
        if expect_ident {
            if !ident_start(c) {
                return Ok(false);
            }
            if read_ident(lx, c)? == "interface" {
                return Ok(false);
            }
            expect_ident = false;
        } else if c == '.' {
            expect_ident = true;
        } else if c == '(' {
            return skip_parens(lx);
        } else {
            lx.push(c);
            return Ok(true);
        }
    }
}

fn skip_parens<R: Read>(lx: &mut Chars<R>) -> Result<bool, LexError> {
    let mut depth = 1;
    while depth > 0 {
        let c = match skip_trivia(lx)? {
            Trivia::Char(c) => c,
            _ => return Ok(false),
        };
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            '"' | '\'' => loop {
                match lx.next()? {
                    None => return Ok(false),
                    Some('\\') => {
                        lx.next()?;
                    }
                    Some(q) if q == c => break,
                    Some(_) => {}
                }
            },
            _ => {}
        }
    }
    Ok(true)
}

fn package_clause<R: Read>(lx: &mut Chars<R>) -> Result<String, LexError> {
    let mut name = String::new();
    let mut expect_ident = true;
    loop {
        let c = match skip_trivia(lx)? {
            Trivia::Char(c) => c,
            _ => return Err(LexError::Malformed("no terminating ';' before end of file".into())),
        };
        if expect_ident {
            if !ident_start(c) {
                return Err(LexError::Malformed(format!("expected a name segment, found {c:?}")));
            }
            name.push_str(&read_ident(lx, c)?);
            expect_ident = false;
        } else {
            match c {
                '.' => {
                    name.push('.');
                    expect_ident = true;
                }
                ';' => return Ok(name),
                other => return Err(LexError::Malformed(format!("unexpected {other:?} in package name"))),
            }
        }
    }
}
