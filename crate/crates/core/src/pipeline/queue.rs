use std::collections::VecDeque;
use std::sync::{Condvar, Mutex, MutexGuard};

use crate::error::{Error, Result};

/// What a consumer gets from [`StageQueue::recv`].
#[derive(Debug, PartialEq, Eq)]
pub enum Received<T> {
    Item(T),
    /// End of stream. Delivered exactly once, after the last item.
    End,
}

#[derive(Debug)]
struct State<T> {
    buf: VecDeque<T>,
    closed: bool,
    end_delivered: bool,
    aborted: bool,
    max_occupancy: usize,
    sent: usize,
}

/// Bounded blocking FIFO connecting two pipeline stages.
///
/// `send` blocks while the queue is full, `recv` while it is empty. `close`
/// marks end of stream; `abort` wakes every waiter with an error so a
/// failing stage cannot leave its neighbours blocked.
#[derive(Debug)]
pub struct StageQueue<T> {
    capacity: usize,
    state: Mutex<State<T>>,
    not_empty: Condvar,
    not_full: Condvar,
}

impl<T> StageQueue<T> {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Config("queue capacity must be positive".into()));
        }
        Ok(StageQueue {
            capacity,
            state: Mutex::new(State {
                buf: VecDeque::with_capacity(capacity),
                closed: false,
                end_delivered: false,
                aborted: false,
                max_occupancy: 0,
                sent: 0,
            }),
            not_empty: Condvar::new(),
            not_full: Condvar::new(),
        })
    }

    fn lock(&self) -> MutexGuard<'_, State<T>> {
        // a panicking stage aborts the queue; the data itself stays consistent
        self.state.lock().unwrap_or_else(|p| p.into_inner())
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.lock().buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Highest occupancy observed so far.
    pub fn max_occupancy(&self) -> usize {
        self.lock().max_occupancy
    }

    /// Number of items accepted so far.
    pub fn sent(&self) -> usize {
        self.lock().sent
    }

    pub fn send(&self, item: T) -> Result<()> {
        let mut st = self.lock();
        while st.buf.len() >= self.capacity && !st.aborted {
            st = self.not_full.wait(st).unwrap_or_else(|p| p.into_inner());
        }
        if st.aborted {
            return Err(Error::QueueAborted);
        }
        if st.closed {
            return Err(Error::Consistency("send on a closed queue".into()));
        }
        st.buf.push_back(item);
        st.sent += 1;
        st.max_occupancy = st.max_occupancy.max(st.buf.len());
        drop(st);
        self.not_empty.notify_one();
        Ok(())
    }

    pub fn recv(&self) -> Result<Received<T>> {
        let mut st = self.lock();
        while st.buf.is_empty() && !st.closed && !st.aborted {
            st = self.not_empty.wait(st).unwrap_or_else(|p| p.into_inner());
        }
        if st.aborted {
            return Err(Error::QueueAborted);
        }
        if let Some(item) = st.buf.pop_front() {
            drop(st);
            self.not_full.notify_one();
            return Ok(Received::Item(item));
        }
        if st.end_delivered {
            return Err(Error::QueueDrained);
        }
        st.end_delivered = true;
        Ok(Received::End)
    }

    /// Marks end of stream. Items already queued are still delivered.
    pub fn close(&self) {
        self.lock().closed = true;
        self.not_empty.notify_all();
    }

    pub fn abort(&self) {
        self.lock().aborted = true;
        self.not_empty.notify_all();
        self.not_full.notify_all();
    }

    pub fn is_aborted(&self) -> bool {
        self.lock().aborted
    }
}
