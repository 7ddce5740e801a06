//! Length-delimited frames over a byte stream, and the links a session sends
//! them through.

use serde::{Deserialize, Serialize};
use std::io::{self, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::mpsc;

/// Largest message accepted by [`read_message`].
pub const MAX_MESSAGE: usize = 1 << 16;

/// Writes `payload` preceded by its length as a little-endian u32.
pub fn write_message<W: Write>(w: &mut W, payload: &[u8]) -> io::Result<()> {
    let len = u32::try_from(payload.len()).map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "message too long"))?;
    w.write_all(&len.to_le_bytes())?;
    w.write_all(payload)?;
    w.flush()
}

/// Reads one length-prefixed message. Returns `None` on a clean end of stream
/// between messages.
pub fn read_message<R: Read>(r: &mut R) -> io::Result<Option<Vec<u8>>> {
    let mut len = [0u8; 4];
    let mut got = 0;
    while got < 4 {
        match r.read(&mut len[got..]) {
            Ok(0) if got == 0 => return Ok(None),
            Ok(0) => return Err(io::ErrorKind::UnexpectedEof.into()),
            Ok(n) => got += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    let len = u32::from_le_bytes(len) as usize;
    if len > MAX_MESSAGE {
        return Err(io::Error::new(io::ErrorKind::InvalidData, format!("message length {len} exceeds limit")));
    }
    let mut payload = vec![0u8; len];
    r.read_exact(&mut payload)?;
    Ok(Some(payload))
}

/// Where a session's frames travel.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Endpoint {
    /// In-process channel.
    #[default]
    Loopback,
    /// TCP socket; the session listens on this address and connects to itself.
    Tcp(String),
}

pub(crate) trait LinkTx: Send {
    fn send(&mut self, payload: &[u8]) -> io::Result<()>;
}

pub(crate) trait LinkRx: Send {
    fn recv(&mut self) -> io::Result<Option<Vec<u8>>>;
}

struct ChannelTx(mpsc::Sender<Vec<u8>>);
struct ChannelRx(mpsc::Receiver<Vec<u8>>);

impl LinkTx for ChannelTx {
    fn send(&mut self, payload: &[u8]) -> io::Result<()> {
        self.0
            .send(payload.to_vec())
            .map_err(|_| io::Error::new(io::ErrorKind::BrokenPipe, "receiver gone"))
    }
}

impl LinkRx for ChannelRx {
    fn recv(&mut self) -> io::Result<Option<Vec<u8>>> {
        Ok(self.0.recv().ok())
    }
}

struct StreamTx(TcpStream);
struct StreamRx(TcpStream);

impl LinkTx for StreamTx {
    fn send(&mut self, payload: &[u8]) -> io::Result<()> {
        write_message(&mut self.0, payload)
    }
}

impl LinkRx for StreamRx {
    fn recv(&mut self) -> io::Result<Option<Vec<u8>>> {
        read_message(&mut self.0)
    }
}

/// Opens both ends of a link.
pub(crate) fn open_link(endpoint: &Endpoint) -> io::Result<(Box<dyn LinkTx>, Box<dyn LinkRx>)> {
    match endpoint {
        Endpoint::Loopback => {
            let (tx, rx) = mpsc::channel();
            Ok((Box::new(ChannelTx(tx)), Box::new(ChannelRx(rx))))
        }
        Endpoint::Tcp(addr) => {
            let listener = TcpListener::bind(addr.as_str())?;
            let client = TcpStream::connect(listener.local_addr()?)?;
            let (server, _) = listener.accept()?;
            client.set_nodelay(true)?;
            Ok((Box::new(StreamTx(client)), Box::new(StreamRx(server))))
        }
    }
}
