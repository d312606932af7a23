use std::path::Path;

use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::phe::hexint::{from_hex, to_hex};
use crate::phe::{Keypair, PublicKey};

pub const PUBLIC_HEADER: &str = "fedgbt-paillier-public v1";
pub const PRIVATE_HEADER: &str = "fedgbt-paillier-private v1";

/// `header`, then one `name hex` line per component.
fn render(header: &str, fields: &[(&str, &BigUint)]) -> String {
    let mut s = format!("{header}\n");
    for (k, v) in fields {
        s.push_str(&format!("{k} {}\n", to_hex(v)));
    }
    s
}

fn parse(text: &str, header: &str, names: &[&str]) -> Result<Vec<BigUint>> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    match lines.next() {
        Some(h) if h == header => {}
        Some(h) => return Err(Error::Serde(format!("expected key header {header:?}, found {h:?}"))),
        None => return Err(Error::Serde("empty key file".into())),
    }
    let mut out = Vec::new();
    for name in names {
        let line = lines
            .next()
            .ok_or_else(|| Error::Serde(format!("key file is missing `{name}`")))?;
        let (k, v) = line
            .split_once(' ')
            .ok_or_else(|| Error::Serde(format!("malformed key line {line:?}")))?;
        if k != *name {
            return Err(Error::Serde(format!("expected `{name}`, found `{k}`")));
        }
        out.push(from_hex(v.trim())?);
    }
    if let Some(extra) = lines.next() {
        return Err(Error::Serde(format!("unexpected key line {extra:?}")));
    }
    Ok(out)
}

pub fn public_key_text(pk: &PublicKey) -> String {
    render(PUBLIC_HEADER, &[("n", pk.n()), ("g", pk.g())])
}

/// Fails for keys whose prime factors are unknown.
pub fn private_key_text(kp: &Keypair) -> Result<String> {
    let (p, q) = kp
        .private
        .primes()
        .ok_or_else(|| Error::Config("private key lacks its prime factors".into()))?;
    Ok(render(
        PRIVATE_HEADER,
        &[
            ("n", kp.public.n()),
            ("g", kp.public.g()),
            ("lambda", kp.private.lambda()),
            ("mu", kp.private.mu()),
            ("p", p),
            ("q", q),
        ],
    ))
}

pub fn parse_public_key(text: &str) -> Result<PublicKey> {
    let v = parse(text, PUBLIC_HEADER, &["n", "g"])?;
    PublicKey::new(v[0].clone(), v[1].clone())
}

/// Parses a private key file, rebuilds the key from its primes and checks
/// that every stored component agrees.
pub fn parse_keypair(text: &str) -> Result<Keypair> {
    let v = parse(text, PRIVATE_HEADER, &["n", "g", "lambda", "mu", "p", "q"])?;
    let kp = Keypair::from_primes(&v[4], &v[5], Some(v[1].clone()))
        .map_err(|e| Error::Serde(format!("invalid private key: {e}")))?;
    if kp.public.n() != &v[0] || kp.private.lambda() != &v[2] || kp.private.mu() != &v[3] {
        return Err(Error::Serde("private key components are inconsistent".into()));
    }
    Ok(kp)
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Writes `paillier.pub` and `paillier.key` into `dir`.
pub fn write_keypair(dir: impl AsRef<Path>, kp: &Keypair) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write(&dir.join("paillier.pub"), &public_key_text(&kp.public))?;
    write(&dir.join("paillier.key"), &private_key_text(kp)?)
}

pub fn read_public_key(path: impl AsRef<Path>) -> Result<PublicKey> {
    parse_public_key(&read(path.as_ref())?)
}

pub fn read_keypair(path: impl AsRef<Path>) -> Result<Keypair> {
    parse_keypair(&read(path.as_ref())?)
}
