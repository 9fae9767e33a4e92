"""Pure-Python kernel fallback.

Every function here has a compiled twin in ``_kernels.pyx``. The two are kept
line-for-line equivalent (same operations, same order, plain IEEE-754 doubles)
so that switching backends never changes a single bit of a rollout. Keep any
edit mirrored in the .pyx file.

Layouts used throughout:

* quad state, 17 doubles: p[0:3], q[3:7] (w,x,y,z, body->world), v[7:10],
  body rates w[10:13], rotor speeds [13:17]
* quad params, 26 doubles: m, Ix, Iy, Iz, k_f, k_m, T_m, g, Omega_max, F_max,
  rotor_pos (4x3 row major), rotor_spin (4)
* pid params, 13 doubles: kp (3), ki (3), kd (3), i_limit (3), output_scale
"""

import math

BACKEND = "python"

# quad params indices
_PM = 0
_PIX = 1
_PIY = 2
_PIZ = 3
_PKF = 4
_PKM = 5
_PTM = 6
_PG = 7
_POMAX = 8
_PFMAX = 9
_PRPOS = 10
_PSPIN = 22


def _clamp(x, lo, hi):
    if x < lo:
        return lo
    if x > hi:
        return hi
    return x


# ---------------------------------------------------------------------------
# rigid-body quadrotor integration
# ---------------------------------------------------------------------------

def _quad_deriv(qw, qx, qy, qz, vx, vy, vz, wx, wy, wz, r0, r1, r2, r3, par):
    """Time derivative of (p, q, v, w) given rotor speeds. dp = v is implicit."""
    kf = par[_PKF]
    km = par[_PKM]
    m = par[_PM]
    g = par[_PG]
    ix = par[_PIX]
    iy = par[_PIY]
    iz = par[_PIZ]

    f0 = kf * r0 * r0
    f1 = kf * r1 * r1
    f2 = kf * r2 * r2
    f3 = kf * r3 * r3
    thrust = f0 + f1 + f2 + f3

    # quaternion kinematics: qdot = 0.5 * q (x) (0, w)
    dqw = -0.5 * (qx * wx + qy * wy + qz * wz)
    dqx = 0.5 * (qw * wx + qy * wz - qz * wy)
    dqy = 0.5 * (qw * wy + qz * wx - qx * wz)
    dqz = 0.5 * (qw * wz + qx * wy - qy * wx)

    # world-frame acceleration: gravity + R * (0, 0, thrust/m)
    tm = thrust / m
    dvx = 2.0 * (qx * qz + qw * qy) * tm
    dvy = 2.0 * (qy * qz - qw * qx) * tm
    dvz = -g + (1.0 - 2.0 * (qx * qx + qy * qy)) * tm

    # body torques: rotor reaction about z plus r_pos x (0, 0, f)
    tx = (par[_PRPOS + 1] * f0 + par[_PRPOS + 4] * f1
          + par[_PRPOS + 7] * f2 + par[_PRPOS + 10] * f3)
    ty = -(par[_PRPOS + 0] * f0 + par[_PRPOS + 3] * f1
           + par[_PRPOS + 6] * f2 + par[_PRPOS + 9] * f3)
    tz = km * (par[_PSPIN] * r0 * r0 + par[_PSPIN + 1] * r1 * r1
               + par[_PSPIN + 2] * r2 * r2 + par[_PSPIN + 3] * r3 * r3)

    # Euler's rotation equation, diagonal inertia
    cx = wy * (iz * wz) - wz * (iy * wy)
    cy = wz * (ix * wx) - wx * (iz * wz)
    cz = wx * (iy * wy) - wy * (ix * wx)
    dwx = (tx - cx) / ix
    dwy = (ty - cy) / iy
    dwz = (tz - cz) / iz

    return (dqw, dqx, dqy, dqz, dvx, dvy, dvz, dwx, dwy, dwz)


def integrate_quad(state, cmd, dt, n_substeps, par):
    """Advance one quad by ``n_substeps`` RK4 steps of ``dt`` each, in place.

    Rotor speeds follow the exact exponential motor response and are sampled
    at the RK4 substep times. Returns 1 if the final state is finite, else 0.
    """
    omax = par[_POMAX]
    tm = par[_PTM]

    c0 = _clamp(cmd[0], 0.0, omax)
    c1 = _clamp(cmd[1], 0.0, omax)
    c2 = _clamp(cmd[2], 0.0, omax)
    c3 = _clamp(cmd[3], 0.0, omax)

    eh = math.exp(-tm * (dt * 0.5))
    ef = math.exp(-tm * dt)

    for _ in range(n_substeps):
        px = state[0]
        py = state[1]
        pz = state[2]
        qw = state[3]
        qx = state[4]
        qy = state[5]
        qz = state[6]
        vx = state[7]
        vy = state[8]
        vz = state[9]
        wx = state[10]
        wy = state[11]
        wz = state[12]
        r0 = state[13]
        r1 = state[14]
        r2 = state[15]
        r3 = state[16]

        # rotor speeds at t, t + dt/2, t + dt (exact first-order response)
        rb0 = c0 + (r0 - c0) * eh
        rb1 = c1 + (r1 - c1) * eh
        rb2 = c2 + (r2 - c2) * eh
        rb3 = c3 + (r3 - c3) * eh
        rc0 = c0 + (r0 - c0) * ef
        rc1 = c1 + (r1 - c1) * ef
        rc2 = c2 + (r2 - c2) * ef
        rc3 = c3 + (r3 - c3) * ef

        k1 = _quad_deriv(qw, qx, qy, qz, vx, vy, vz, wx, wy, wz,
                         r0, r1, r2, r3, par)
        h = dt * 0.5
        k2 = _quad_deriv(qw + h * k1[0], qx + h * k1[1], qy + h * k1[2],
                         qz + h * k1[3], vx + h * k1[4], vy + h * k1[5],
                         vz + h * k1[6], wx + h * k1[7], wy + h * k1[8],
                         wz + h * k1[9], rb0, rb1, rb2, rb3, par)
        k3 = _quad_deriv(qw + h * k2[0], qx + h * k2[1], qy + h * k2[2],
                         qz + h * k2[3], vx + h * k2[4], vy + h * k2[5],
                         vz + h * k2[6], wx + h * k2[7], wy + h * k2[8],
                         wz + h * k2[9], rb0, rb1, rb2, rb3, par)
        k4 = _quad_deriv(qw + dt * k3[0], qx + dt * k3[1], qy + dt * k3[2],
                         qz + dt * k3[3], vx + dt * k3[4], vy + dt * k3[5],
                         vz + dt * k3[6], wx + dt * k3[7], wy + dt * k3[8],
                         wz + dt * k3[9], rc0, rc1, rc2, rc3, par)

        s = dt / 6.0
        # positions: dp = v, with the same RK4 weights on velocity samples
        px = px + s * (vx + 2.0 * (vx + h * k1[4]) + 2.0 * (vx + h * k2[4])
                       + (vx + dt * k3[4]))
        py = py + s * (vy + 2.0 * (vy + h * k1[5]) + 2.0 * (vy + h * k2[5])
                       + (vy + dt * k3[5]))
        pz = pz + s * (vz + 2.0 * (vz + h * k1[6]) + 2.0 * (vz + h * k2[6])
                       + (vz + dt * k3[6]))
        qw = qw + s * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
        qx = qx + s * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
        qy = qy + s * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2])
        qz = qz + s * (k1[3] + 2.0 * k2[3] + 2.0 * k3[3] + k4[3])
        vx = vx + s * (k1[4] + 2.0 * k2[4] + 2.0 * k3[4] + k4[4])
        vy = vy + s * (k1[5] + 2.0 * k2[5] + 2.0 * k3[5] + k4[5])
        vz = vz + s * (k1[6] + 2.0 * k2[6] + 2.0 * k3[6] + k4[6])
        wx = wx + s * (k1[7] + 2.0 * k2[7] + 2.0 * k3[7] + k4[7])
        wy = wy + s * (k1[8] + 2.0 * k2[8] + 2.0 * k3[8] + k4[8])
        wz = wz + s * (k1[9] + 2.0 * k2[9] + 2.0 * k3[9] + k4[9])

        qn = math.sqrt(qw * qw + qx * qx + qy * qy + qz * qz)
        if qn > 0.0:
            qw = qw / qn
            qx = qx / qn
            qy = qy / qn
            qz = qz / qn

        state[0] = px
        state[1] = py
        state[2] = pz
        state[3] = qw
        state[4] = qx
        state[5] = qy
        state[6] = qz
        state[7] = vx
        state[8] = vy
        state[9] = vz
        state[10] = wx
        state[11] = wy
        state[12] = wz
        state[13] = _clamp(rc0, 0.0, omax)
        state[14] = _clamp(rc1, 0.0, omax)
        state[15] = _clamp(rc2, 0.0, omax)
        state[16] = _clamp(rc3, 0.0, omax)

    ok = 1
    for i in range(17):
        if not math.isfinite(state[i]):
            ok = 0
            break
    return ok


# ---------------------------------------------------------------------------
# CTBR rate PID + X mixer
# ---------------------------------------------------------------------------

def pid_mixer(ctbr, w, integ, prev_err, dt, par, pidp, mix_inv, rotor_out):
    """Body-rate PID plus thrust mixer. Writes rotor commands, returns sat flag.

    ``integ`` and ``prev_err`` (3 each) are updated in place. ``mix_inv`` is
    the 4x4 row-major inverse mixer mapping (total thrust, tx, ty, tz) to
    per-rotor forces. Saturation preserves total thrust and scales the
    differential part down.
    """
    kf = par[_PKF]
    omax = par[_POMAX]
    fmax = par[_PFMAX]

    pi = math.pi
    fcmd = _clamp(ctbr[0], 0.0, 1.0)
    ftot = fcmd * fmax
    f_rot_max = kf * omax * omax
    scale = pidp[12]

    tau = [0.0, 0.0, 0.0]
    for a in range(3):
        rate_cmd = _clamp(ctbr[1 + a], -pi, pi)
        err = rate_cmd - w[a]
        acc = integ[a] + err * dt
        lim = pidp[9 + a]
        acc = _clamp(acc, -lim, lim)
        integ[a] = acc
        derr = (err - prev_err[a]) / dt
        prev_err[a] = err
        alpha = pidp[a] * err + pidp[3 + a] * acc + pidp[6 + a] * derr
        tau[a] = par[_PIX + a] * alpha * scale

    sat = 0
    s = 1.0
    fb = [0.0, 0.0, 0.0, 0.0]
    fd = [0.0, 0.0, 0.0, 0.0]
    for j in range(4):
        fb[j] = mix_inv[4 * j] * ftot
        fd[j] = (mix_inv[4 * j + 1] * tau[0] + mix_inv[4 * j + 2] * tau[1]
                 + mix_inv[4 * j + 3] * tau[2])
        if fd[j] > 0.0:
            room = f_rot_max - fb[j]
            if room < 0.0:
                room = 0.0
            sj = room / fd[j]
            if sj < s:
                s = sj
        elif fd[j] < 0.0:
            room = fb[j]
            if room < 0.0:
                room = 0.0
            sj = room / (-fd[j])
            if sj < s:
                s = sj
    if s < 1.0:
        sat = 1

    for j in range(4):
        fj = fb[j] + s * fd[j]
        if fj < 0.0:
            fj = 0.0
            sat = 1
        elif fj > f_rot_max:
            fj = f_rot_max
            sat = 1
        rotor_out[j] = _clamp(math.sqrt(fj / kf), 0.0, omax)
    return sat


# ---------------------------------------------------------------------------
# point-mass velocity controller (heuristic baselines)
# ---------------------------------------------------------------------------

def velocity_lag(p, v, vdes, max_speed, tau_v, dt):
    """First-order velocity tracking with speed clamp; integrates position."""
    dx = vdes[0]
    dy = vdes[1]
    dz = vdes[2]
    sp = math.sqrt(dx * dx + dy * dy + dz * dz)
    if sp > max_speed:
        k = max_speed / sp
        dx = dx * k
        dy = dy * k
        dz = dz * k
    if tau_v > 1e-12:
        a = 1.0 - math.exp(-dt / tau_v)
    else:
        a = 1.0
    vx = v[0] + a * (dx - v[0])
    vy = v[1] + a * (dy - v[1])
    vz = v[2] + a * (dz - v[2])
    sv = math.sqrt(vx * vx + vy * vy + vz * vz)
    if sv > max_speed:
        k = max_speed / sv
        vx = vx * k
        vy = vy * k
        vz = vz * k
    v[0] = vx
    v[1] = vy
    v[2] = vz
    p[0] = p[0] + vx * dt
    p[1] = p[1] + vy * dt
    p[2] = p[2] + vz * dt


# ---------------------------------------------------------------------------
# potential-field evader
# ---------------------------------------------------------------------------

def evader_force(e, pursuers, n, obstacles, m, r_obs, arena_r, arena_h,
                 w_pursuer, w_obstacle, w_boundary, eps, mode2d, out):
    """Sum of 1/d repulsions from pursuers, obstacle surfaces, and boundaries."""
    ex = e[0]
    ey = e[1]
    ez = e[2]
    fx = 0.0
    fy = 0.0
    fz = 0.0

    for i in range(n):
        dx = ex - pursuers[3 * i]
        dy = ey - pursuers[3 * i + 1]
        dz = ez - pursuers[3 * i + 2]
        d = math.sqrt(dx * dx + dy * dy + dz * dz)
        if d > 1e-12:
            dd = d if d > eps else eps
            mag = w_pursuer / dd
            fx += mag * (dx / d)
            fy += mag * (dy / d)
            fz += mag * (dz / d)

    for j in range(m):
        dx = ex - obstacles[2 * j]
        dy = ey - obstacles[2 * j + 1]
        d = math.sqrt(dx * dx + dy * dy)
        if d > 1e-12:
            dsurf = d - r_obs
            dd = dsurf if dsurf > eps else eps
            mag = w_obstacle / dd
            fx += mag * (dx / d)
            fy += mag * (dy / d)

    r = math.sqrt(ex * ex + ey * ey)
    if r > 1e-12:
        gap = arena_r - r
        dd = gap if gap > eps else eps
        mag = w_boundary / dd
        fx += -mag * (ex / r)
        fy += -mag * (ey / r)

    if mode2d:
        fz = 0.0
    else:
        dd = ez if ez > eps else eps
        fz += w_boundary / dd
        gap = arena_h - ez
        dd = gap if gap > eps else eps
        fz -= w_boundary / dd

    out[0] = fx
    out[1] = fy
    out[2] = fz


def evader_step(e, heading, force, speed, dt, arena_r, arena_h, mode2d):
    """Advance the evader along normalize(force) (or the held heading) and clip.

    Updates ``e`` and ``heading`` in place; returns 1 if the position was
    clipped to the arena.
    """
    fx = force[0]
    fy = force[1]
    fz = force[2]
    fn = math.sqrt(fx * fx + fy * fy + fz * fz)
    if fn > 1e-9:
        heading[0] = fx / fn
        heading[1] = fy / fn
        heading[2] = fz / fn
    ex = e[0] + speed * heading[0] * dt
    ey = e[1] + speed * heading[1] * dt
    ez = e[2] + speed * heading[2] * dt

    clipped = 0
    r = math.sqrt(ex * ex + ey * ey)
    if r > arena_r:
        k = arena_r / r
        ex = ex * k
        ey = ey * k
        clipped = 1
    if not mode2d:
        if ez < 0.0:
            ez = 0.0
            clipped = 1
        elif ez > arena_h:
            ez = arena_h
            clipped = 1
    e[0] = ex
    e[1] = ey
    e[2] = ez
    return clipped


def evader_tick(e, heading, pursuers, n, obstacles, m, r_obs, arena_r, arena_h,
                w_pursuer, w_obstacle, w_boundary, eps, speed, dt, mode2d,
                force_out):
    """Fused force + step + clip used by the environment tick."""
    evader_force(e, pursuers, n, obstacles, m, r_obs, arena_r, arena_h,
                 w_pursuer, w_obstacle, w_boundary, eps, mode2d, force_out)
    return evader_step(e, heading, force_out, speed, dt, arena_r, arena_h,
                       mode2d)


# ---------------------------------------------------------------------------
# geometry: line of sight, collisions, nearest obstacles
# ---------------------------------------------------------------------------

def segment_blocked(ax, ay, bx, by, cx, cy, r):
    """True iff 2D segment AB passes strictly inside the disk (C, r)."""
    abx = bx - ax
    aby = by - ay
    acx = cx - ax
    acy = cy - ay
    l2 = abx * abx + aby * aby
    if l2 <= 0.0:
        dx = acx
        dy = acy
    else:
        t = (acx * abx + acy * aby) / l2
        if t < 0.0:
            t = 0.0
        elif t > 1.0:
            t = 1.0
        dx = acx - t * abx
        dy = acy - t * aby
    return 1 if dx * dx + dy * dy < r * r else 0


def line_of_sight(a, b, obstacles, m, r_obs):
    """True iff no obstacle disk blocks the 2D projection of segment a-b."""
    ax = a[0]
    ay = a[1]
    bx = b[0]
    by = b[1]
    for j in range(m):
        if segment_blocked(ax, ay, bx, by,
                           obstacles[2 * j], obstacles[2 * j + 1], r_obs):
            return 0
    return 1


def world_geometry(pos, n, e, obstacles, m, r_obs, clearance, arena_r, arena_h,
                   k, out_los, out_coll, out_wall, out_dist, out_knear):
    """Per-tick geometry: LOS flags, collision flags, evader distances, and
    the k nearest obstacles (horizontal distance, ties by index).

    Returns 1 if at least one pursuer sees the evader.
    """
    any_los = 0
    ex = e[0]
    ey = e[1]
    ez = e[2]
    rsafe = r_obs + clearance

    for i in range(n):
        px = pos[3 * i]
        py = pos[3 * i + 1]
        pz = pos[3 * i + 2]

        los = line_of_sight(pos[3 * i:3 * i + 2], e, obstacles, m, r_obs)
        out_los[i] = los
        if los:
            any_los = 1

        dx = ex - px
        dy = ey - py
        dz = ez - pz
        out_dist[i] = math.sqrt(dx * dx + dy * dy + dz * dz)

        coll = 0
        for j in range(m):
            ox = px - obstacles[2 * j]
            oy = py - obstacles[2 * j + 1]
            if math.sqrt(ox * ox + oy * oy) < rsafe:
                coll = 1
                break
        if not coll:
            for j in range(n):
                if j == i:
                    continue
                ox = px - pos[3 * j]
                oy = py - pos[3 * j + 1]
                oz = pz - pos[3 * j + 2]
                if math.sqrt(ox * ox + oy * oy + oz * oz) < clearance:
                    coll = 1
                    break
        out_coll[i] = coll

        wall = 0
        r = math.sqrt(px * px + py * py)
        if r > arena_r - clearance:
            wall = 1
        if pz < clearance or pz > arena_h - clearance:
            wall = 1
        out_wall[i] = wall

        # selection of k nearest obstacles by squared horizontal distance
        for t in range(k):
            best = -1
            bestd = math.inf
            for j in range(m):
                taken = 0
                for u in range(t):
                    if out_knear[i * k + u] == j:
                        taken = 1
                        break
                if taken:
                    continue
                ox = obstacles[2 * j] - px
                oy = obstacles[2 * j + 1] - py
                d2 = ox * ox + oy * oy
                if d2 < bestd:
                    bestd = d2
                    best = j
            out_knear[i * k + t] = best
    return any_los


# ---------------------------------------------------------------------------
# observation assembly
# ---------------------------------------------------------------------------

def fill_observations(out, states, n, e, detected, pred, horizon, knear, k,
                      obstacles, mask_value):
    """Write one observation row per pursuer into ``out`` (n x obs_dim).

    Row layout: quat (4), velocity (3), real relative evader (3 or mask),
    predicted relative evader (3*horizon), other pursuers ((n-1)*3), k nearest
    obstacles (k*3, mask triple when fewer obstacles exist).
    """
    dim = 10 + 3 * horizon + 3 * (n - 1) + 3 * k
    for i in range(n):
        base = i * dim
        px = states[17 * i]
        py = states[17 * i + 1]
        pz = states[17 * i + 2]
        out[base] = states[17 * i + 3]
        out[base + 1] = states[17 * i + 4]
        out[base + 2] = states[17 * i + 5]
        out[base + 3] = states[17 * i + 6]
        out[base + 4] = states[17 * i + 7]
        out[base + 5] = states[17 * i + 8]
        out[base + 6] = states[17 * i + 9]
        if detected:
            out[base + 7] = e[0] - px
            out[base + 8] = e[1] - py
            out[base + 9] = e[2] - pz
        else:
            out[base + 7] = mask_value
            out[base + 8] = mask_value
            out[base + 9] = mask_value
        idx = base + 10
        for j in range(horizon):
            out[idx] = pred[3 * j] - px
            out[idx + 1] = pred[3 * j + 1] - py
            out[idx + 2] = pred[3 * j + 2] - pz
            idx += 3
        for j in range(n):
            if j == i:
                continue
            out[idx] = states[17 * j] - px
            out[idx + 1] = states[17 * j + 1] - py
            out[idx + 2] = states[17 * j + 2] - pz
            idx += 3
        for t in range(k):
            jo = knear[i * k + t]
            if jo >= 0:
                out[idx] = obstacles[2 * jo] - px
                out[idx + 1] = obstacles[2 * jo + 1] - py
                out[idx + 2] = 0.0
            else:
                out[idx] = mask_value
                out[idx + 1] = mask_value
                out[idx + 2] = mask_value
            idx += 3


# ---------------------------------------------------------------------------
# fused per-pursuer tick
# ---------------------------------------------------------------------------

def pursuer_tick(state, action, mode, dt_control, n_substeps, par, pidp,
                 mix_inv, integ, prev_err, max_speed, tau_v, arena_r, arena_h,
                 rotor_scratch):
    """One control tick for a single pursuer, in place.

    mode 0: CTBR action -> rate PID -> mixer -> RK4 substeps.
    mode 1: velocity action -> first-order point-mass update.
    Then a hard clip to the arena cylinder. Returns (finite, saturated,
    clipped) flags.
    """
    sat = 0
    if mode == 0:
        sat = pid_mixer(action, state[10:13], integ, prev_err, dt_control,
                        par, pidp, mix_inv, rotor_scratch)
        finite = integrate_quad(state, rotor_scratch,
                                dt_control / n_substeps, n_substeps, par)
    else:
        velocity_lag(state[0:3], state[7:10], action, max_speed, tau_v,
                     dt_control)
        finite = 1
        for i in range(10):
            if not math.isfinite(state[i]):
                finite = 0
                break

    clipped = 0
    px = state[0]
    py = state[1]
    pz = state[2]
    r = math.sqrt(px * px + py * py)
    if r > arena_r:
        kk = arena_r / r
        state[0] = px * kk
        state[1] = py * kk
        clipped = 1
    if pz < 0.0:
        state[2] = 0.0
        clipped = 1
    elif pz > arena_h:
        state[2] = arena_h
        clipped = 1
    return finite, sat, clipped
