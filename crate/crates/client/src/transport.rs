//! A sender transport backed by a remote controller session: each complete
//! line written becomes one `feed` call, each response line lands in the
//! read buffer. This is the over-the-wire counterpart of the in-process
//! loopback.

use braillecam_core::sender::{Transport, TransportError};

use crate::{Client, ClientError};

pub struct HttpControllerTransport<'a> {
    client: &'a Client,
    controller_id: u64,
    line_buf: Vec<u8>,
    inbox: Vec<u8>,
    inbox_pos: usize,
    closed: bool,
    /// Simulated controller clock after the closing drain.
    final_clock_s: Option<f64>,
}

impl<'a> HttpControllerTransport<'a> {
    pub fn new(client: &'a Client, controller_id: u64) -> HttpControllerTransport<'a> {
        HttpControllerTransport {
            client,
            controller_id,
            line_buf: Vec::new(),
            inbox: Vec::new(),
            inbox_pos: 0,
            closed: false,
            final_clock_s: None,
        }
    }

    pub fn controller_id(&self) -> u64 {
        self.controller_id
    }
}

fn wire_error(e: ClientError) -> TransportError {
    TransportError::Io(e.to_string())
}

impl Transport for HttpControllerTransport<'_> {
    fn write(&mut self, buf: &[u8]) -> Result<(), TransportError> {
        if self.closed {
            return Err(TransportError::Closed);
        }
        for &b in buf {
            if b != b'\n' {
                self.line_buf.push(b);
                continue;
            }
            let line = String::from_utf8_lossy(&self.line_buf).into_owned();
            self.line_buf.clear();
            let response = self
                .client
                .controller_feed(self.controller_id, &line)
                .map_err(wire_error)?;
            self.inbox.extend_from_slice(response.response.as_bytes());
            self.inbox.push(b'\n');
        }
        Ok(())
    }

    fn read(&mut self, buf: &mut [u8]) -> Result<usize, TransportError> {
        let available = &self.inbox[self.inbox_pos..];
        let n = available.len().min(buf.len());
        buf[..n].copy_from_slice(&available[..n]);
        self.inbox_pos += n;
        if self.inbox_pos == self.inbox.len() {
            self.inbox.clear();
            self.inbox_pos = 0;
        }
        Ok(n)
    }

    fn close(&mut self) -> Result<(), TransportError> {
        if self.closed {
            return Ok(());
        }
        self.closed = true;
        let drained = self
            .client
            .controller_drain(self.controller_id)
            .map_err(wire_error)?;
        self.final_clock_s = Some(drained.clock_s);
        Ok(())
    }

    fn sim_elapsed_s(&self) -> Option<f64> {
        self.final_clock_s
    }
}
