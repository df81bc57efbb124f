/** Minimal SVG scene builder: enough for bar charts, scatter plots and
 *  log-log error plots without any rendering dependency. */

export interface Extent { min: number; max: number; }

export function extent(values: number[], pad = 0.05): Extent {
    let min = Math.min(...values);
    let max = Math.max(...values);
    if (!(Number.isFinite(min) && Number.isFinite(max))) {
        throw new Error('non-finite data extent');
    }
    if (min === max) { min -= 1; max += 1; }
    const d = (max - min) * pad;
    return { min: min - d, max: max + d };
}

export class Scene {
    readonly width: number;
    readonly height: number;
    readonly margin = { left: 58, right: 16, top: 28, bottom: 42 };
    private parts: string[] = [];
    xr: Extent = { min: 0, max: 1 };
    yr: Extent = { min: 0, max: 1 };
    xlog = false;
    ylog = false;

    constructor(width = 640, height = 420) {
        this.width = width;
        this.height = height;
    }

    setRanges(xr: Extent, yr: Extent, xlog = false, ylog = false): void {
        this.xr = xlog ? { min: Math.log10(xr.min), max: Math.log10(xr.max) } : xr;
        this.yr = ylog ? { min: Math.log10(yr.min), max: Math.log10(yr.max) } : yr;
        this.xlog = xlog;
        this.ylog = ylog;
    }

    px(x: number): number {
        const v = this.xlog ? Math.log10(x) : x;
        const f = (v - this.xr.min) / (this.xr.max - this.xr.min);
        return this.margin.left + f * (this.width - this.margin.left - this.margin.right);
    }

    py(y: number): number {
        const v = this.ylog ? Math.log10(y) : y;
        const f = (v - this.yr.min) / (this.yr.max - this.yr.min);
        return this.height - this.margin.bottom
            - f * (this.height - this.margin.top - this.margin.bottom);
    }

    add(fragment: string): void {
        this.parts.push(fragment);
    }

    line(x1: number, y1: number, x2: number, y2: number, stroke = '#1f77b4', width = 1.5, dash = ''): void {
        const d = dash ? ` stroke-dasharray="${dash}"` : '';
        this.add(`<line x1="${r2(this.px(x1))}" y1="${r2(this.py(y1))}" x2="${r2(this.px(x2))}" y2="${r2(this.py(y2))}" stroke="${stroke}" stroke-width="${width}"${d}/>`);
    }

    polyline(xs: number[], ys: number[], stroke = '#1f77b4', width = 1.5): void {
        const pts = xs.map((x, i) => `${r2(this.px(x))},${r2(this.py(ys[i]))}`).join(' ');
        this.add(`<polyline fill="none" stroke="${stroke}" stroke-width="${width}" points="${pts}"/>`);
    }

    circle(x: number, y: number, radius = 3, fill = '#1f77b4'): void {
        this.add(`<circle cx="${r2(this.px(x))}" cy="${r2(this.py(y))}" r="${radius}" fill="${fill}"/>`);
    }

    rect(x0: number, x1: number, y0: number, y1: number, fill = '#1f77b4', opacity = 1.0): void {
        const xa = this.px(x0);
        const xb = this.px(x1);
        const ya = this.py(y1);
        const yb = this.py(y0);
        this.add(`<rect x="${r2(xa)}" y="${r2(ya)}" width="${r2(xb - xa)}" height="${r2(yb - ya)}" fill="${fill}" fill-opacity="${opacity}"/>`);
    }

    text(x: number, y: number, content: string, anchor = 'middle', size = 12, dataCoords = true): void {
        const cx = dataCoords ? this.px(x) : x;
        const cy = dataCoords ? this.py(y) : y;
        this.add(`<text x="${r2(cx)}" y="${r2(cy)}" text-anchor="${anchor}" font-size="${size}" font-family="sans-serif">${esc(content)}</text>`);
    }

    axes(xlabel: string, ylabel: string, title = ''): void {
        const { left, right, top, bottom } = this.margin;
        const x0 = left;
        const x1 = this.width - right;
        const y0 = this.height - bottom;
        const y1 = top;
        this.add(`<rect x="${x0}" y="${y1}" width="${x1 - x0}" height="${y0 - y1}" fill="none" stroke="#333" stroke-width="1"/>`);
        for (const f of [0, 0.25, 0.5, 0.75, 1]) {
            const vx = this.xr.min + f * (this.xr.max - this.xr.min);
            const vy = this.yr.min + f * (this.yr.max - this.yr.min);
            const lx = this.xlog ? Math.pow(10, vx) : vx;
            const ly = this.ylog ? Math.pow(10, vy) : vy;
            const sx = x0 + f * (x1 - x0);
            const sy = y0 - f * (y0 - y1);
            this.add(`<line x1="${r2(sx)}" y1="${y0}" x2="${r2(sx)}" y2="${y0 + 4}" stroke="#333"/>`);
            this.add(`<text x="${r2(sx)}" y="${y0 + 16}" text-anchor="middle" font-size="10" font-family="sans-serif">${fmt(lx)}</text>`);
            this.add(`<line x1="${x0 - 4}" y1="${r2(sy)}" x2="${x0}" y2="${r2(sy)}" stroke="#333"/>`);
            this.add(`<text x="${x0 - 6}" y="${r2(sy) + 3}" text-anchor="end" font-size="10" font-family="sans-serif">${fmt(ly)}</text>`);
        }
        this.text((x0 + x1) / 2, y0 + 34, xlabel, 'middle', 12, false);
        this.add(`<text x="14" y="${(y0 + y1) / 2}" text-anchor="middle" font-size="12" font-family="sans-serif" transform="rotate(-90 14 ${(y0 + y1) / 2})">${esc(ylabel)}</text>`);
        if (title) {
            this.text((x0 + x1) / 2, y1 - 8, title, 'middle', 13, false);
        }
    }

    render(): string {
        return `<svg xmlns="http://www.w3.org/2000/svg" width="${this.width}" height="${this.height}" viewBox="0 0 ${this.width} ${this.height}">`
            + `<rect width="100%" height="100%" fill="white"/>`
            + this.parts.join('\n')
            + `</svg>`;
    }
}

function r2(v: number): string {
    return (Math.round(v * 100) / 100).toString();
}

function fmt(v: number): string {
    if (v === 0) return '0';
    const a = Math.abs(v);
    if (a >= 1e4 || a < 1e-3) return v.toExponential(1);
    return Number(v.toPrecision(3)).toString();
}

function esc(s: string): string {
    return s.replace(/&/g, '&amp;').replace(/</g, '&lt;').replace(/>/g, '&gt;');
}
