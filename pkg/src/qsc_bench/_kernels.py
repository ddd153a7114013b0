"""Compiled inner loops: SplitMix64 draws and the windowed transfer simulation."""

from __future__ import annotations

import numpy as np

from ._accel import kernel

GOLDEN_GAMMA = np.uint64(0x9E3779B97F4A7C15)
MIX1 = np.uint64(0xBF58476D1CE4E5B9)
MIX2 = np.uint64(0x94D049BB133111EB)
S30 = np.uint64(30)
S27 = np.uint64(27)
S31 = np.uint64(31)
S11 = np.uint64(11)
INV_2_53 = 1.0 / 9007199254740992.0

# Transfer status codes.
OK = 0
FAILED = 1


@kernel
def splitmix_next(state):
    state = state + GOLDEN_GAMMA
    z = state
    z = (z ^ (z >> S30)) * MIX1
    z = (z ^ (z >> S27)) * MIX2
    return state, z ^ (z >> S31)


@kernel
def splitmix_uniform(state):
    state, z = splitmix_next(state)
    return state, float(z >> S11) * INV_2_53


@kernel
def rto_kernel(srtt, attempt, rto_initial, rto_min, backoff, rto_max):
    if srtt < 0.0:
        base = rto_initial
    else:
        base = max(rto_min, 2.0 * srtt)
    rto = base * backoff**attempt
    return min(rto, rto_max)


@kernel
def deliver_kernel(
    payload_bytes,
    seg_payload,
    header_bytes,
    start_time,
    latency,
    loss_fwd,
    loss_rev,
    bandwidth,
    ack_bytes,
    init_cwnd,
    cwnd_cap,
    rto_initial,
    rto_min,
    backoff,
    rto_max,
    max_retries,
    delayed_ack,
    delack_timeout,
    state,
):
    """Round-based windowed transfer of `payload_bytes` over a lossy path.

    Each round sends up to cwnd segments starting at the cumulative ACK point
    (go-back-N, no SACK). Every transmission draws two uniforms: data path,
    then reverse path. A round that gets the whole window acknowledged ends at
    that ACK's arrival and doubles cwnd (capped); otherwise the round ends when
    the retransmission timer fires and cwnd halves (floor 1).

    Returns (status, completion_time, delivered_time, segments_sent,
    bytes_delivered, state). Times are absolute simulation seconds.
    """
    n = (payload_bytes + seg_payload - 1) // seg_payload
    if n == 0:
        return OK, start_time, start_time, 0, 0, state

    last_payload = payload_bytes - (n - 1) * seg_payload
    received = np.zeros(n, dtype=np.bool_)
    recv_cum = 0
    snd_una = 0
    highest_sent = 0
    cwnd = init_cwnd
    srtt = -1.0
    stall = 0
    sent = 0
    t = start_time
    delivered_time = -1.0
    ack_ser = ack_bytes / bandwidth

    while snd_una < n:
        first = snd_una
        last = min(n, first + cwnd)
        fresh_first = first >= highest_sent
        fwd_free = t
        rev_free = t
        last_event = t
        round_done = -1.0
        sample = -1.0
        held = 0
        held_arr = 0.0
        held_u = 0.0

        for j in range(first, last):
            wire = seg_payload + header_bytes
            if j == n - 1:
                wire = last_payload + header_bytes
            fwd_free = fwd_free + wire / bandwidth
            sent += 1
            state, u_data = splitmix_uniform(state)
            state, u_ack = splitmix_uniform(state)
            if u_data < loss_fwd:
                continue
            arr = fwd_free + latency
            if arr > last_event:
                last_event = arr
            if not received[j]:
                received[j] = True
                while recv_cum < n and received[recv_cum]:
                    recv_cum += 1
                if recv_cum == n and delivered_time < 0.0:
                    delivered_time = arr
            if delayed_ack:
                held += 1
                if held < 2:
                    held_arr = arr
                    held_u = u_ack
                    continue
                held = 0
            ack_send = max(arr, rev_free)
            rev_free = ack_send + ack_ser
            if u_ack < loss_rev:
                continue
            ack_arr = rev_free + latency
            if ack_arr > last_event:
                last_event = ack_arr
            if recv_cum > snd_una:
                if sample < 0.0 and fresh_first and recv_cum > first:
                    sample = ack_arr - t
                snd_una = recv_cum
                if snd_una >= last and round_done < 0.0:
                    round_done = ack_arr

        if held > 0:
            # Delayed-ACK timer flush for an odd trailing segment.
            ack_send = max(held_arr + delack_timeout, rev_free)
            rev_free = ack_send + ack_ser
            if held_u >= loss_rev:
                ack_arr = rev_free + latency
                if ack_arr > last_event:
                    last_event = ack_arr
                if recv_cum > snd_una:
                    if sample < 0.0 and fresh_first and recv_cum > first:
                        sample = ack_arr - t
                    snd_una = recv_cum
                    if snd_una >= last and round_done < 0.0:
                        round_done = ack_arr

        if last > highest_sent:
            highest_sent = last
        if sample >= 0.0:
            if srtt < 0.0:
                srtt = sample
            else:
                srtt = 0.875 * srtt + 0.125 * sample

        if round_done >= 0.0:
            t = round_done
            cwnd = min(cwnd * 2, cwnd_cap)
            stall = 0
        else:
            end = t + rto_kernel(srtt, stall, rto_initial, rto_min, backoff, rto_max)
            if last_event > end:
                end = last_event
            t = end
            cwnd = max(1, cwnd // 2)
            if snd_una > first:
                stall = 0
            else:
                stall += 1
                if stall > max_retries:
                    done = 0
                    for k in range(n):
                        if received[k]:
                            done += 1
                    nbytes = done * seg_payload
                    if received[n - 1]:
                        nbytes = nbytes - seg_payload + last_payload
                    return FAILED, t, delivered_time, sent, nbytes, state

    return OK, t, delivered_time, sent, payload_bytes, state
