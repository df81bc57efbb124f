import { readFileSync, writeFileSync } from 'node:fs';
import { parseCsv } from './csv.js';
import {
    FIGURE_KINDS, FigureKind, renderCensusBars, renderIntervalCover,
    renderPainleveError, renderSlowManifold, renderStableHistogram,
} from './figures.js';

function usage(): never {
    console.error('usage: render --kind <kind> --inputs <csv...> --output <svg>');
    console.error(`kinds: ${FIGURE_KINDS.join(', ')}`);
    process.exit(2);
}

function parseArgs(argv: string[]): { kind: FigureKind; inputs: string[]; output: string } {
    let kind = '';
    const inputs: string[] = [];
    let output = '';
    for (let i = 0; i < argv.length; i++) {
        const a = argv[i];
        if (a === '--kind') kind = argv[++i];
        else if (a === '--output') output = argv[++i];
        else if (a === '--inputs') {
            while (i + 1 < argv.length && !argv[i + 1].startsWith('--')) {
                inputs.push(argv[++i]);
            }
        } else usage();
    }
    if (!kind || !inputs.length || !output) usage();
    if (!FIGURE_KINDS.includes(kind as FigureKind)) usage();
    return { kind: kind as FigureKind, inputs, output };
}

function sidecarSlope(csvPath: string): number | undefined {
    try {
        const meta = JSON.parse(readFileSync(csvPath.replace(/\.csv$/, '.meta.json'), 'utf8'));
        const s = meta?.extras?.action_error_slope;
        return typeof s === 'number' ? s : undefined;
    } catch {
        return undefined;
    }
}

export function main(argv: string[]): number {
    const { kind, inputs, output } = parseArgs(argv);
    const tables = inputs.map(p => parseCsv(readFileSync(p, 'utf8')));
    let svg: string;
    switch (kind) {
        case 'slow-manifold':
            svg = renderSlowManifold(tables[0], tables[1]);
            break;
        case 'census-bars':
            svg = renderCensusBars(tables[0]);
            break;
        case 'stable-histogram':
            svg = renderStableHistogram(tables[0]).svg;
            break;
        case 'interval-cover':
            svg = renderIntervalCover(tables[0]);
            break;
        case 'painleve-error':
            svg = renderPainleveError(tables[0], sidecarSlope(inputs[0]));
            break;
    }
    writeFileSync(output, svg);
    return 0;
}

if (process.argv[1] && process.argv[1].endsWith('cli.js')) {
    try {
        process.exit(main(process.argv.slice(2)));
    } catch (err) {
        console.error(JSON.stringify({ error: (err as Error).name, message: (err as Error).message }));
        process.exit(1);
    }
}
