use std::sync::mpsc::{channel, Receiver, Sender};

use super::{Endpoint, Link, Role};
use crate::error::{Error, Result};

/// In-process link backed by a pair of channels.
pub struct MemoryLink {
    peer: Role,
    tx: Sender<Vec<u8>>,
    rx: Receiver<Vec<u8>>,
}

impl MemoryLink {
    pub fn pair(a: Role, b: Role) -> (MemoryLink, MemoryLink) {
        let (tx_ab, rx_ab) = channel();
        let (tx_ba, rx_ba) = channel();
        (
            MemoryLink {
                peer: b,
                tx: tx_ab,
                rx: rx_ba,
            },
            MemoryLink {
                peer: a,
                tx: tx_ba,
                rx: rx_ab,
            },
        )
    }
}

impl Link for MemoryLink {
    fn send(&mut self, frame: Vec<u8>) -> Result<()> {
        self.tx.send(frame).map_err(|_| Error::LinkClosed(self.peer))
    }

    fn recv(&mut self) -> Result<Vec<u8>> {
        self.rx.recv().map_err(|_| Error::LinkClosed(self.peer))
    }
}

/// Fully connected in-process endpoints for S0, S1 and S2.
pub fn mesh() -> [Endpoint; 3] {
    let mut links: [Vec<(Role, Box<dyn Link>)>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for (a, b) in [(Role::S0, Role::S1), (Role::S0, Role::S2), (Role::S1, Role::S2)] {
        let (la, lb) = MemoryLink::pair(a, b);
        links[a.index()].push((b, Box::new(la)));
        links[b.index()].push((a, Box::new(lb)));
    }
    let [l0, l1, l2] = links;
    [
        Endpoint::new(Role::S0, l0).unwrap(),
        Endpoint::new(Role::S1, l1).unwrap(),
        Endpoint::new(Role::S2, l2).unwrap(),
    ]
}
