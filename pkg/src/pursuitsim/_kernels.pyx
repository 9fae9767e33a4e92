# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels.

Line-for-line twin of ``_kernels_py.py``; identical operations in identical
order on IEEE-754 doubles (the extension is built with -ffp-contract=off), so
both backends produce bit-identical rollouts. Keep any edit mirrored there.
"""

from libc.math cimport INFINITY, exp, isfinite, sqrt

BACKEND = "compiled"

cdef int _PM = 0
cdef int _PIX = 1
cdef int _PIY = 2
cdef int _PIZ = 3
cdef int _PKF = 4
cdef int _PKM = 5
cdef int _PTM = 6
cdef int _PG = 7
cdef int _POMAX = 8
cdef int _PFMAX = 9
cdef int _PRPOS = 10
cdef int _PSPIN = 22


cdef inline double _clamp(double x, double lo, double hi) nogil:
    if x < lo:
        return lo
    if x > hi:
        return hi
    return x


# ---------------------------------------------------------------------------
# rigid-body quadrotor integration
# ---------------------------------------------------------------------------

cdef void _quad_deriv(double qw, double qx, double qy, double qz,
                      double vx, double vy, double vz,
                      double wx, double wy, double wz,
                      double r0, double r1, double r2, double r3,
                      const double* par, double* out) nogil:
    cdef double kf = par[_PKF]
    cdef double km = par[_PKM]
    cdef double m = par[_PM]
    cdef double g = par[_PG]
    cdef double ix = par[_PIX]
    cdef double iy = par[_PIY]
    cdef double iz = par[_PIZ]

    cdef double f0 = kf * r0 * r0
    cdef double f1 = kf * r1 * r1
    cdef double f2 = kf * r2 * r2
    cdef double f3 = kf * r3 * r3
    cdef double thrust = f0 + f1 + f2 + f3

    out[0] = -0.5 * (qx * wx + qy * wy + qz * wz)
    out[1] = 0.5 * (qw * wx + qy * wz - qz * wy)
    out[2] = 0.5 * (qw * wy + qz * wx - qx * wz)
    out[3] = 0.5 * (qw * wz + qx * wy - qy * wx)

    cdef double tm = thrust / m
    out[4] = 2.0 * (qx * qz + qw * qy) * tm
    out[5] = 2.0 * (qy * qz - qw * qx) * tm
    out[6] = -g + (1.0 - 2.0 * (qx * qx + qy * qy)) * tm

    cdef double tx = (par[_PRPOS + 1] * f0 + par[_PRPOS + 4] * f1
                      + par[_PRPOS + 7] * f2 + par[_PRPOS + 10] * f3)
    cdef double ty = -(par[_PRPOS + 0] * f0 + par[_PRPOS + 3] * f1
                       + par[_PRPOS + 6] * f2 + par[_PRPOS + 9] * f3)
    cdef double tz = km * (par[_PSPIN] * r0 * r0 + par[_PSPIN + 1] * r1 * r1
                           + par[_PSPIN + 2] * r2 * r2
                           + par[_PSPIN + 3] * r3 * r3)

    cdef double cx = wy * (iz * wz) - wz * (iy * wy)
    cdef double cy = wz * (ix * wx) - wx * (iz * wz)
    cdef double cz = wx * (iy * wy) - wy * (ix * wx)
    out[7] = (tx - cx) / ix
    out[8] = (ty - cy) / iy
    out[9] = (tz - cz) / iz


cdef int _integrate_quad(double[::1] state, const double* cmd, double dt,
                         int n_substeps, const double* par) nogil:
    cdef double omax = par[_POMAX]
    cdef double tm = par[_PTM]

    cdef double c0 = _clamp(cmd[0], 0.0, omax)
    cdef double c1 = _clamp(cmd[1], 0.0, omax)
    cdef double c2 = _clamp(cmd[2], 0.0, omax)
    cdef double c3 = _clamp(cmd[3], 0.0, omax)

    cdef double eh = exp(-tm * (dt * 0.5))
    cdef double ef = exp(-tm * dt)

    cdef double px, py, pz, qw, qx, qy, qz, vx, vy, vz, wx, wy, wz
    cdef double r0, r1, r2, r3
    cdef double rb0, rb1, rb2, rb3, rc0, rc1, rc2, rc3
    cdef double k1[10]
    cdef double k2[10]
    cdef double k3[10]
    cdef double k4[10]
    cdef double h, s, qn
    cdef int it, i, ok

    for it in range(n_substeps):
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

        rb0 = c0 + (r0 - c0) * eh
        rb1 = c1 + (r1 - c1) * eh
        rb2 = c2 + (r2 - c2) * eh
        rb3 = c3 + (r3 - c3) * eh
        rc0 = c0 + (r0 - c0) * ef
        rc1 = c1 + (r1 - c1) * ef
        rc2 = c2 + (r2 - c2) * ef
        rc3 = c3 + (r3 - c3) * ef

        _quad_deriv(qw, qx, qy, qz, vx, vy, vz, wx, wy, wz,
                    r0, r1, r2, r3, par, k1)
        h = dt * 0.5
        _quad_deriv(qw + h * k1[0], qx + h * k1[1], qy + h * k1[2],
                    qz + h * k1[3], vx + h * k1[4], vy + h * k1[5],
                    vz + h * k1[6], wx + h * k1[7], wy + h * k1[8],
                    wz + h * k1[9], rb0, rb1, rb2, rb3, par, k2)
        _quad_deriv(qw + h * k2[0], qx + h * k2[1], qy + h * k2[2],
                    qz + h * k2[3], vx + h * k2[4], vy + h * k2[5],
                    vz + h * k2[6], wx + h * k2[7], wy + h * k2[8],
                    wz + h * k2[9], rb0, rb1, rb2, rb3, par, k3)
        _quad_deriv(qw + dt * k3[0], qx + dt * k3[1], qy + dt * k3[2],
                    qz + dt * k3[3], vx + dt * k3[4], vy + dt * k3[5],
                    vz + dt * k3[6], wx + dt * k3[7], wy + dt * k3[8],
                    wz + dt * k3[9], rc0, rc1, rc2, rc3, par, k4)

        s = dt / 6.0
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

        qn = sqrt(qw * qw + qx * qx + qy * qy + qz * qz)
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
        if not isfinite(state[i]):
            ok = 0
            break
    return ok


def integrate_quad(double[::1] state, double[::1] cmd, double dt,
                   int n_substeps, double[::1] par):
    return _integrate_quad(state, &cmd[0], dt, n_substeps, &par[0])


# ---------------------------------------------------------------------------
# CTBR rate PID + X mixer
# ---------------------------------------------------------------------------

cdef double _PI = 3.141592653589793


cdef int _pid_mixer(const double* ctbr, const double* w, double* integ,
                    double* prev_err, double dt, const double* par,
                    const double* pidp, const double* mix_inv,
                    double* rotor_out) nogil:
    cdef double kf = par[_PKF]
    cdef double omax = par[_POMAX]
    cdef double fmax = par[_PFMAX]

    cdef double fcmd = _clamp(ctbr[0], 0.0, 1.0)
    cdef double ftot = fcmd * fmax
    cdef double f_rot_max = kf * omax * omax
    cdef double scale = pidp[12]

    cdef double tau[3]
    cdef double rate_cmd, err, acc, lim, derr, alpha
    cdef int a, j
    for a in range(3):
        rate_cmd = _clamp(ctbr[1 + a], -_PI, _PI)
        err = rate_cmd - w[a]
        acc = integ[a] + err * dt
        lim = pidp[9 + a]
        acc = _clamp(acc, -lim, lim)
        integ[a] = acc
        derr = (err - prev_err[a]) / dt
        prev_err[a] = err
        alpha = pidp[a] * err + pidp[3 + a] * acc + pidp[6 + a] * derr
        tau[a] = par[_PIX + a] * alpha * scale

    cdef int sat = 0
    cdef double s = 1.0
    cdef double fb[4]
    cdef double fd[4]
    cdef double room, sj, fj
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
        rotor_out[j] = _clamp(sqrt(fj / kf), 0.0, omax)
    return sat


def pid_mixer(double[::1] ctbr, double[::1] w, double[::1] integ,
              double[::1] prev_err, double dt, double[::1] par,
              double[::1] pidp, double[::1] mix_inv, double[::1] rotor_out):
    return _pid_mixer(&ctbr[0], &w[0], &integ[0], &prev_err[0], dt, &par[0],
                      &pidp[0], &mix_inv[0], &rotor_out[0])


# ---------------------------------------------------------------------------
# point-mass velocity controller (heuristic baselines)
# ---------------------------------------------------------------------------

cdef void _velocity_lag(double* p, double* v, const double* vdes,
                        double max_speed, double tau_v, double dt) nogil:
    cdef double dx = vdes[0]
    cdef double dy = vdes[1]
    cdef double dz = vdes[2]
    cdef double sp = sqrt(dx * dx + dy * dy + dz * dz)
    cdef double k, a, vx, vy, vz, sv
    if sp > max_speed:
        k = max_speed / sp
        dx = dx * k
        dy = dy * k
        dz = dz * k
    if tau_v > 1e-12:
        a = 1.0 - exp(-dt / tau_v)
    else:
        a = 1.0
    vx = v[0] + a * (dx - v[0])
    vy = v[1] + a * (dy - v[1])
    vz = v[2] + a * (dz - v[2])
    sv = sqrt(vx * vx + vy * vy + vz * vz)
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


def velocity_lag(double[::1] p, double[::1] v, double[::1] vdes,
                 double max_speed, double tau_v, double dt):
    _velocity_lag(&p[0], &v[0], &vdes[0], max_speed, tau_v, dt)


# ---------------------------------------------------------------------------
# potential-field evader
# ---------------------------------------------------------------------------

cdef void _evader_force(const double* e, const double* pursuers, int n,
                        const double* obstacles, int m, double r_obs,
                        double arena_r, double arena_h, double w_pursuer,
                        double w_obstacle, double w_boundary, double eps,
                        int mode2d, double* out) nogil:
    cdef double ex = e[0]
    cdef double ey = e[1]
    cdef double ez = e[2]
    cdef double fx = 0.0
    cdef double fy = 0.0
    cdef double fz = 0.0
    cdef double dx, dy, dz, d, dd, mag, dsurf, r, gap
    cdef int i, j

    for i in range(n):
        dx = ex - pursuers[3 * i]
        dy = ey - pursuers[3 * i + 1]
        dz = ez - pursuers[3 * i + 2]
        d = sqrt(dx * dx + dy * dy + dz * dz)
        if d > 1e-12:
            dd = d if d > eps else eps
            mag = w_pursuer / dd
            fx += mag * (dx / d)
            fy += mag * (dy / d)
            fz += mag * (dz / d)

    for j in range(m):
        dx = ex - obstacles[2 * j]
        dy = ey - obstacles[2 * j + 1]
        d = sqrt(dx * dx + dy * dy)
        if d > 1e-12:
            dsurf = d - r_obs
            dd = dsurf if dsurf > eps else eps
            mag = w_obstacle / dd
            fx += mag * (dx / d)
            fy += mag * (dy / d)

    r = sqrt(ex * ex + ey * ey)
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


def evader_force(double[::1] e, double[::1] pursuers, int n,
                 double[::1] obstacles, int m, double r_obs, double arena_r,
                 double arena_h, double w_pursuer, double w_obstacle,
                 double w_boundary, double eps, int mode2d, double[::1] out):
    cdef const double* obs_ptr = NULL
    if m > 0:
        obs_ptr = &obstacles[0]
    cdef const double* pur_ptr = NULL
    if n > 0:
        pur_ptr = &pursuers[0]
    _evader_force(&e[0], pur_ptr, n, obs_ptr, m, r_obs, arena_r, arena_h,
                  w_pursuer, w_obstacle, w_boundary, eps, mode2d, &out[0])


cdef int _evader_step(double* e, double* heading, const double* force,
                      double speed, double dt, double arena_r, double arena_h,
                      int mode2d) nogil:
    cdef double fx = force[0]
    cdef double fy = force[1]
    cdef double fz = force[2]
    cdef double fn = sqrt(fx * fx + fy * fy + fz * fz)
    cdef double ex, ey, ez, r, k
    cdef int clipped = 0
    if fn > 1e-9:
        heading[0] = fx / fn
        heading[1] = fy / fn
        heading[2] = fz / fn
    ex = e[0] + speed * heading[0] * dt
    ey = e[1] + speed * heading[1] * dt
    ez = e[2] + speed * heading[2] * dt

    r = sqrt(ex * ex + ey * ey)
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


def evader_step(double[::1] e, double[::1] heading, double[::1] force,
                double speed, double dt, double arena_r, double arena_h,
                int mode2d):
    return _evader_step(&e[0], &heading[0], &force[0], speed, dt, arena_r,
                        arena_h, mode2d)


def evader_tick(double[::1] e, double[::1] heading, double[::1] pursuers,
                int n, double[::1] obstacles, int m, double r_obs,
                double arena_r, double arena_h, double w_pursuer,
                double w_obstacle, double w_boundary, double eps, double speed,
                double dt, int mode2d, double[::1] force_out):
    cdef const double* obs_ptr = NULL
    if m > 0:
        obs_ptr = &obstacles[0]
    cdef const double* pur_ptr = NULL
    if n > 0:
        pur_ptr = &pursuers[0]
    _evader_force(&e[0], pur_ptr, n, obs_ptr, m, r_obs, arena_r, arena_h,
                  w_pursuer, w_obstacle, w_boundary, eps, mode2d,
                  &force_out[0])
    return _evader_step(&e[0], &heading[0], &force_out[0], speed, dt, arena_r,
                        arena_h, mode2d)


# ---------------------------------------------------------------------------
# geometry: line of sight, collisions, nearest obstacles
# ---------------------------------------------------------------------------

cdef int _segment_blocked(double ax, double ay, double bx, double by,
                          double cx, double cy, double r) nogil:
    cdef double abx = bx - ax
    cdef double aby = by - ay
    cdef double acx = cx - ax
    cdef double acy = cy - ay
    cdef double l2 = abx * abx + aby * aby
    cdef double t, dx, dy
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


def segment_blocked(double ax, double ay, double bx, double by, double cx,
                    double cy, double r):
    return _segment_blocked(ax, ay, bx, by, cx, cy, r)


cdef int _line_of_sight(double ax, double ay, double bx, double by,
                        const double* obstacles, int m, double r_obs) nogil:
    cdef int j
    for j in range(m):
        if _segment_blocked(ax, ay, bx, by, obstacles[2 * j],
                            obstacles[2 * j + 1], r_obs):
            return 0
    return 1


def line_of_sight(double[::1] a, double[::1] b, double[::1] obstacles, int m,
                  double r_obs):
    cdef const double* obs_ptr = NULL
    if m > 0:
        obs_ptr = &obstacles[0]
    return _line_of_sight(a[0], a[1], b[0], b[1], obs_ptr, m, r_obs)


def world_geometry(double[::1] pos, int n, double[::1] e,
                   double[::1] obstacles, int m, double r_obs,
                   double clearance, double arena_r, double arena_h, int k,
                   long[::1] out_los, long[::1] out_coll, long[::1] out_wall,
                   double[::1] out_dist, long[::1] out_knear):
    cdef int any_los = 0
    cdef double ex = e[0]
    cdef double ey = e[1]
    cdef double ez = e[2]
    cdef double rsafe = r_obs + clearance
    cdef const double* obs_ptr = NULL
    if m > 0:
        obs_ptr = &obstacles[0]

    cdef int i, j, t, u, los, coll, wall, taken, best
    cdef double px, py, pz, dx, dy, dz, ox, oy, oz, r, d2, bestd

    for i in range(n):
        px = pos[3 * i]
        py = pos[3 * i + 1]
        pz = pos[3 * i + 2]

        los = _line_of_sight(px, py, ex, ey, obs_ptr, m, r_obs)
        out_los[i] = los
        if los:
            any_los = 1

        dx = ex - px
        dy = ey - py
        dz = ez - pz
        out_dist[i] = sqrt(dx * dx + dy * dy + dz * dz)

        coll = 0
        for j in range(m):
            ox = px - obstacles[2 * j]
            oy = py - obstacles[2 * j + 1]
            if sqrt(ox * ox + oy * oy) < rsafe:
                coll = 1
                break
        if not coll:
            for j in range(n):
                if j == i:
                    continue
                ox = px - pos[3 * j]
                oy = py - pos[3 * j + 1]
                oz = pz - pos[3 * j + 2]
                if sqrt(ox * ox + oy * oy + oz * oz) < clearance:
                    coll = 1
                    break
        out_coll[i] = coll

        wall = 0
        r = sqrt(px * px + py * py)
        if r > arena_r - clearance:
            wall = 1
        if pz < clearance or pz > arena_h - clearance:
            wall = 1
        out_wall[i] = wall

        for t in range(k):
            best = -1
            bestd = INFINITY
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

def fill_observations(double[::1] out, double[::1] states, int n,
                      double[::1] e, int detected, double[::1] pred,
                      int horizon, long[::1] knear, int k,
                      double[::1] obstacles, double mask_value):
    cdef int dim = 10 + 3 * horizon + 3 * (n - 1) + 3 * k
    cdef int i, j, t, base, idx
    cdef long jo
    cdef double px, py, pz

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

def pursuer_tick(double[::1] state, double[::1] action, int mode,
                 double dt_control, int n_substeps, double[::1] par,
                 double[::1] pidp, double[::1] mix_inv, double[::1] integ,
                 double[::1] prev_err, double max_speed, double tau_v,
                 double arena_r, double arena_h, double[::1] rotor_scratch):
    cdef int sat = 0
    cdef int finite = 1
    cdef int clipped = 0
    cdef int i
    cdef double px, py, pz, r, kk

    if mode == 0:
        sat = _pid_mixer(&action[0], &state[10], &integ[0], &prev_err[0],
                         dt_control, &par[0], &pidp[0], &mix_inv[0],
                         &rotor_scratch[0])
        finite = _integrate_quad(state, &rotor_scratch[0],
                                 dt_control / n_substeps, n_substeps,
                                 &par[0])
    else:
        _velocity_lag(&state[0], &state[7], &action[0], max_speed, tau_v,
                      dt_control)
        finite = 1
        for i in range(10):
            if not isfinite(state[i]):
                finite = 0
                break

    px = state[0]
    py = state[1]
    pz = state[2]
    r = sqrt(px * px + py * py)
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
