use std::collections::BTreeSet;

/// Receiver side of one TCP flow: cumulative ACK per data segment, no delay.
#[derive(Debug, Clone, Default)]
pub struct TcpSink {
    /// Next in-order segment expected; also the ACK value sent.
    pub expected: u64,
    out_of_order: BTreeSet<u64>,
    pub received: u64,
}

impl TcpSink {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records segment `seq` and returns the cumulative ACK to send back.
    pub fn on_data(&mut self, seq: u64) -> u64 {
        self.received += 1;
        if seq == self.expected {
            self.expected += 1;
            while self.out_of_order.remove(&self.expected) {
                self.expected += 1;
            }
        } else if seq > self.expected {
            self.out_of_order.insert(seq);
        }
        self.expected
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn in_order() {
        let mut s = TcpSink::new();
        let acks: Vec<u64> = [0, 1, 2].iter().map(|&q| s.on_data(q)).collect();
        assert_eq!(acks, vec![1, 2, 3]);
    }

    #[test]
    fn hole_then_fill() {
        let mut s = TcpSink::new();
        assert_eq!(s.on_data(0), 1);
        assert_eq!(s.on_data(2), 1);
        assert_eq!(s.on_data(1), 3);
        // duplicate of old data keeps the ack where it is
        assert_eq!(s.on_data(0), 3);
    }
}
