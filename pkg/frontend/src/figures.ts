import { Table, numeric, requireColumns } from './csv.js';
import { Scene, extent } from './svg.js';

export type FigureKind =
    | 'slow-manifold'
    | 'census-bars'
    | 'stable-histogram'
    | 'interval-cover'
    | 'painleve-error';

export const FIGURE_KINDS: FigureKind[] = [
    'slow-manifold', 'census-bars', 'stable-histogram', 'interval-cover',
    'painleve-error',
];

const TWO_PI = 2 * Math.PI;

/** Trajectory in the (u, x) plane with the bifurcating branch overlay. */
export function renderSlowManifold(traj: Table, branch?: Table): string {
    requireColumns(traj, ['u', 'x'], 'trajectory');
    const u = numeric(traj, 'u').map(v => ((v % TWO_PI) + TWO_PI) % TWO_PI);
    const x = numeric(traj, 'x');
    const sc = new Scene();
    sc.setRanges({ min: 0, max: TWO_PI }, extent(x));
    for (let i = 0; i < u.length; i++) {
        sc.circle(u[i], x[i], 0.8, '#777');
    }
    if (branch) {
        requireColumns(branch, ['u', 'x_branch'], 'slow manifold');
        const bu = numeric(branch, 'u');
        const bx = numeric(branch, 'x_branch');
        const order = bu.map((_, i) => i).sort((a, b) => bu[a] - bu[b]);
        const us = order.map(i => bu[i]);
        const xs = order.map(i => bx[i]);
        sc.polyline(us, xs, '#1f77b4', 2);
        sc.polyline(us, xs.map(v => -v), '#1f77b4', 2);
        sc.polyline([0, TWO_PI], [0, 0], '#d62728', 1);
    }
    sc.axes('u (mod 2pi)', 'x', 'trajectory against the slow manifold');
    return sc.render();
}

/** Orbit counts per eps: total, stable, small-window unstable. */
export function renderCensusBars(census: Table): string {
    requireColumns(census, ['eps', 'pos', 'spos', 'upos_small'], 'census');
    const eps = numeric(census, 'eps');
    const pos = numeric(census, 'pos');
    const spos = numeric(census, 'spos');
    const upos = numeric(census, 'upos_small');
    const n = eps.length;
    const sc = new Scene();
    sc.setRanges({ min: -0.6, max: n - 0.4 }, extent([0, ...pos], 0.08));
    const w = 0.26;
    const series: [number[], string, string][] = [
        [pos, '#1f77b4', 'all'],
        [spos, '#2ca02c', 'stable'],
        [upos, '#d62728', 'unstable small-x'],
    ];
    series.forEach(([vals, color], k) => {
        for (let i = 0; i < n; i++) {
            sc.rect(i + (k - 1) * w - w / 2, i + (k - 1) * w + w / 2, 0, (vals as number[])[i], color as string, 0.9);
        }
    });
    for (let i = 0; i < n; i++) {
        sc.text(i, -0.04 * Math.max(...pos), String(eps[i]), 'middle', 10);
    }
    series.forEach(([, color, label], k) => {
        sc.text(n - 0.45, Math.max(...pos) * (1.0 - 0.07 * k), `■ ${label}`, 'end', 11);
        void color;
    });
    sc.axes('eps (category)', 'periodic orbits', 'orbit census');
    return sc.render();
}

/** Outcome histogram of the stable-solution sweep; returns the SVG and the
 *  zero-bin count so callers can cross-check against the raw sweep. */
export function renderStableHistogram(hist: Table): { svg: string; zeroBin: number } {
    requireColumns(hist, ['n_stable', 'count'], 'sweep histogram');
    const ns = numeric(hist, 'n_stable');
    const counts = numeric(hist, 'count');
    const sc = new Scene();
    sc.setRanges({ min: Math.min(...ns) - 0.6, max: Math.max(...ns) + 0.6 },
        extent([0, ...counts], 0.08));
    for (let i = 0; i < ns.length; i++) {
        sc.rect(ns[i] - 0.4, ns[i] + 0.4, 0, counts[i], '#1f77b4', 0.9);
        sc.text(ns[i], counts[i] + 0.01 * Math.max(...counts), String(counts[i]));
    }
    sc.axes('stable solutions per sample', 'outcomes', 'stable-solution sweep');
    const zi = ns.indexOf(0);
    return { svg: sc.render(), zeroBin: zi >= 0 ? counts[zi] : 0 };
}

/** Strip/overlap diagram of the interval-cover iteration. */
export function renderIntervalCover(cover: Table): string {
    requireColumns(cover, ['n', 'f_n'], 'cover');
    const n = numeric(cover, 'n');
    const f = numeric(cover, 'f_n');
    const hasImage = cover.columns.includes('image_len');
    const img = hasImage ? numeric(cover, 'image_len') : null;
    const sc = new Scene();
    sc.setRanges({ min: -0.1, max: Math.PI + 0.1 },
        { min: Math.min(...n) - 1, max: Math.max(...n) + 1 });
    sc.line(0, Math.min(...n) - 1, 0, Math.max(...n) + 1, '#d62728', 1);
    for (let i = 0; i < n.length; i++) {
        if (img && Number.isFinite(img[i])) {
            const end = f[i] + img[i];
            sc.line(f[i], n[i], Math.min(end, Math.PI), n[i], '#1f77b4', 4);
            if (end > Math.PI) {
                sc.line(0, n[i], end - Math.PI, n[i], '#1f77b4', 4);
            }
        }
        sc.circle(f[i], n[i], 3.2, '#13406b');
    }
    sc.axes('residual phase mod pi', 'window index n', 'interval cover');
    return sc.render();
}

/** Log-log action-error plot with the fitted slope annotated. */
export function renderPainleveError(table: Table, slopeHint?: number): string {
    requireColumns(table, ['delta', 'action_error'], 'painleve');
    const d = numeric(table, 'delta');
    const e = numeric(table, 'action_error');
    if (d.some(v => v <= 0) || e.some(v => v <= 0)) {
        throw new Error('log-log plot needs positive deltas and errors');
    }
    let slope = slopeHint;
    if (slope === undefined && d.length >= 2) {
        const lx = d.map(Math.log);
        const ly = e.map(Math.log);
        const mx = lx.reduce((a, b) => a + b, 0) / lx.length;
        const my = ly.reduce((a, b) => a + b, 0) / ly.length;
        let sxy = 0, sxx = 0;
        for (let i = 0; i < lx.length; i++) {
            sxy += (lx[i] - mx) * (ly[i] - my);
            sxx += (lx[i] - mx) ** 2;
        }
        slope = sxy / sxx;
    }
    const sc = new Scene();
    sc.setRanges(extent(d, 0.02), extent(e, 0.05), true, true);
    const order = d.map((_, i) => i).sort((a, b) => d[a] - d[b]);
    sc.polyline(order.map(i => d[i]), order.map(i => e[i]), '#1f77b4', 1.5);
    for (let i = 0; i < d.length; i++) {
        sc.circle(d[i], e[i], 3.5);
    }
    const dref = order.map(i => d[i]);
    const eref = dref.map(v => e[order[0]] * Math.pow(v / dref[0], 0.75));
    sc.polyline(dref, eref, '#999', 1);
    const title = slope === undefined
        ? 'crossing action error'
        : `crossing action error (fitted slope ${slope.toFixed(2)}, reference 3/4)`;
    sc.axes('delta', 'inner action error', title);
    return sc.render();
}
