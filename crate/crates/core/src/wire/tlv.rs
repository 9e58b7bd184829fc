//! Type-length-value framing: 1-byte type, 4-byte big-endian length, value.

use super::WireError;

pub const HEADER_LEN: usize = 5;

pub const INTEREST: u8 = 0x01;
pub const INTEREST_FRAGMENT: u8 = 0x02;
pub const CONTENT_OBJECT: u8 = 0x03;
pub const CONTENT_FRAGMENT: u8 = 0x04;

pub const NAME: u8 = 0x10;
pub const NAME_COMPONENT: u8 = 0x11;
pub const NONCE: u8 = 0x12;
pub const MU_MTU: u8 = 0x13;
pub const REASSEMBLY_ID: u8 = 0x14;
pub const SEQ: u8 = 0x15;
pub const COUNT: u8 = 0x16;
pub const KEY_LOCATOR: u8 = 0x18;
pub const KEY_BYTES: u8 = 0x19;
pub const KEY_NAME: u8 = 0x1a;
pub const SIGNATURE: u8 = 0x1b;
pub const SIGNATURE_SCHEME: u8 = 0x1c;
pub const SIGNATURE_BITS: u8 = 0x1d;
pub const PAYLOAD: u8 = 0x1f;
pub const OBJECT_SIZE: u8 = 0x20;
pub const INTERNAL_STATE: u8 = 0x21;
pub const PAYLOAD_OFFSET: u8 = 0x22;
pub const PAYLOAD_SIZE: u8 = 0x23;
pub const CONTENT_DIGEST: u8 = 0x24;
pub const TRAILER: u8 = 0x25;

#[derive(Default)]
pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn with_capacity(cap: usize) -> Self {
        Writer { buf: Vec::with_capacity(cap) }
    }

    pub fn put(&mut self, typ: u8, value: &[u8]) {
        self.header(typ, value.len());
        self.buf.extend_from_slice(value);
    }

    pub fn header(&mut self, typ: u8, len: usize) {
        self.buf.push(typ);
        self.buf.extend_from_slice(&(len as u32).to_be_bytes());
    }

    /// Writes a TLV whose value is produced by `f`.
    pub fn nested(&mut self, typ: u8, f: impl FnOnce(&mut Writer)) {
        let start = self.buf.len();
        self.header(typ, 0);
        f(self);
        let len = (self.buf.len() - start - HEADER_LEN) as u32;
        self.buf[start + 1..start + HEADER_LEN].copy_from_slice(&len.to_be_bytes());
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf
    }
}

pub struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    pub fn is_empty(&self) -> bool {
        self.pos == self.buf.len()
    }

    pub fn peek_type(&self) -> Option<u8> {
        self.buf.get(self.pos).copied()
    }

    /// Reads the next TLV, which must have type `typ`.
    pub fn expect(&mut self, typ: u8, field: &'static str) -> Result<&'a [u8], WireError> {
        let rest = &self.buf[self.pos..];
        if rest.len() < HEADER_LEN {
            return Err(WireError::Truncated { field });
        }
        if rest[0] != typ {
            return Err(WireError::InvariantViolation {
                field,
                reason: format!("expected type 0x{typ:02x}, found 0x{:02x}", rest[0]),
            });
        }
        let len = u32::from_be_bytes(rest[1..HEADER_LEN].try_into().expect("4 bytes")) as usize;
        if rest.len() - HEADER_LEN < len {
            return Err(WireError::Truncated { field });
        }
        self.pos += HEADER_LEN + len;
        Ok(&rest[HEADER_LEN..HEADER_LEN + len])
    }

    /// Like [`Reader::expect`] but the value must be exactly `N` bytes.
    pub fn expect_fixed<const N: usize>(&mut self, typ: u8, field: &'static str) -> Result<[u8; N], WireError> {
        let value = self.expect(typ, field)?;
        value.try_into().map_err(|_| WireError::InvariantViolation {
            field,
            reason: format!("expected {N} bytes, found {}", value.len()),
        })
    }

    pub fn optional(&mut self, typ: u8, field: &'static str) -> Result<Option<&'a [u8]>, WireError> {
        if self.peek_type() == Some(typ) {
            self.expect(typ, field).map(Some)
        } else {
            Ok(None)
        }
    }

    pub fn finish(&self, field: &'static str) -> Result<(), WireError> {
        if self.is_empty() {
            Ok(())
        } else {
            Err(WireError::InvariantViolation {
                field,
                reason: format!("{} unexpected trailing bytes", self.buf.len() - self.pos),
            })
        }
    }
}
