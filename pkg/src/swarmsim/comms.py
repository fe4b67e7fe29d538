"""Radio link models: stochastic blackout drops and log-normal delays.

Each link owns a two-state blackout chain (off = transmitting, on =
blacked out) that is stepped exactly once per send attempt; a message
sent while the chain lands in the on state is dropped. Surviving
messages arrive after a log-normal delay d = exp(mu + sigma z). All of
a link's randomness comes from its own stream, so traffic on one link
never shifts another link's outcomes.

The default delay parameters put the 3-sigma band of the delay at
[0.1 s, 10 s]; the default chain (p_enter 0.05, p_exit 0.5) has
stationary blackout probability 0.05 / 0.55, about 9.1% of sends
dropped over a long run.
"""

import math
from dataclasses import dataclass

from .faults import ConfigError
from .kernel import NS_PER_S


def lognormal_params(lower: float, upper: float):
    """(mu, sigma) placing the 3-sigma band of ln d on [ln lower, ln upper]."""
    if not 0.0 < lower < upper:
        raise ConfigError(
            f"delay bounds must satisfy 0 < lower < upper, "
            f"got ({lower}, {upper})")
    return ((math.log(lower) + math.log(upper)) / 2.0,
            (math.log(upper) - math.log(lower)) / 6.0)


# the (0.1 s, 10 s) band, written exactly rather than through the
# helper so the documented mu = 0 default holds bit-for-bit
DEFAULT_DELAY_MU = 0.0
DEFAULT_DELAY_SIGMA = math.log(100.0) / 6.0


@dataclass
class LinkStats:
    """Running per-link accounting; in_flight is the balance."""

    sent: int = 0
    dropped: int = 0
    delivered: int = 0
    reordered: int = 0

    @property
    def in_flight(self) -> int:
        return self.sent - self.dropped - self.delivered


class RadioLink:
    """One directed radio link between two process ids.

    deliver, when given, is called as deliver(dst, message, t_arrival)
    from the arrival event; wire it to the host's crosslink input. A
    link without a deliver callback still models drops, delays, and
    stats, which is all the statistical tests need.

    A delivery counts as reordered when some message sent after it has
    already arrived, i.e. its send sequence is below the highest
    sequence delivered so far.
    """

    def __init__(self, src: str, dst: str, kernel, stream, deliver=None,
                 p_enter: float = 0.05, p_exit: float = 0.5,
                 delay_mu: float = DEFAULT_DELAY_MU,
                 delay_sigma: float = DEFAULT_DELAY_SIGMA):
        if not 0.0 <= p_enter <= 1.0 or not 0.0 <= p_exit <= 1.0:
            raise ConfigError(
                f"transition probabilities must lie in [0, 1], "
                f"got p_enter={p_enter}, p_exit={p_exit}")
        if not delay_sigma > 0.0:
            raise ConfigError(f"delay_sigma must be > 0, got {delay_sigma}")
        self.src = src
        self.dst = dst
        self.p_enter = float(p_enter)
        self.p_exit = float(p_exit)
        self.delay_mu = float(delay_mu)
        self.delay_sigma = float(delay_sigma)
        self.blackout_on = False
        self.stats = LinkStats()
        self._kernel = kernel
        self._stream = stream
        self._deliver = deliver
        self._send_seq = 0
        self._max_delivered = -1

    def send(self, message, t: int):
        """Attempt one transmission at kernel time t.

        Steps the blackout chain first; a drop consumes no delay draw.
        Returns the arrival event id, or None for a drop.
        """
        self.stats.sent += 1
        seq = self._send_seq
        self._send_seq += 1
        self._step_chain()
        if self.blackout_on:
            self.stats.dropped += 1
            return None
        t_arrival = t + int(round(self.sample_delay() * NS_PER_S))

        def arrive(kernel, msg=message, s=seq, ta=t_arrival):
            self.stats.delivered += 1
            if s < self._max_delivered:
                self.stats.reordered += 1
            else:
                self._max_delivered = s
            if self._deliver is not None:
                self._deliver(self.dst, msg, ta)

        return self._kernel.schedule(t_arrival, arrive,
                                     label=f"link:{self.src}->{self.dst}")

    def sample_delay(self) -> float:
        """One log-normal delay draw, seconds."""
        z = float(self._stream.standard_normal())
        return math.exp(self.delay_mu + self.delay_sigma * z)

    def _step_chain(self):
        u = float(self._stream.random())
        if self.blackout_on:
            if u < self.p_exit:
                self.blackout_on = False
        else:
            if u < self.p_enter:
                self.blackout_on = True
