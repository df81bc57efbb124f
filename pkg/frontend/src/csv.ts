export interface Table {
    columns: string[];
    rows: Record<string, string>[];
}

export class SchemaMismatch extends Error {
    constructor(message: string) {
        super(message);
        this.name = 'SchemaMismatch';
    }
}

export function parseCsv(text: string): Table {
    const lines = text.split(/\r?\n/).filter(l => l.trim().length > 0);
    if (!lines.length) {
        throw new SchemaMismatch('empty CSV: no header row');
    }
    const columns = lines[0].split(',').map(c => c.trim());
    const rows = lines.slice(1).map(line => {
        const parts = line.split(',');
        const row: Record<string, string> = {};
        columns.forEach((c, i) => { row[c] = (parts[i] ?? '').trim(); });
        return row;
    });
    return { columns, rows };
}

export function requireColumns(table: Table, required: string[], source: string): void {
    for (const col of required) {
        if (!table.columns.includes(col)) {
            throw new SchemaMismatch(`${source}: missing column '${col}'`);
        }
    }
    if (!table.rows.length) {
        throw new SchemaMismatch(`${source}: no data rows`);
    }
}

export function numeric(table: Table, column: string): number[] {
    return table.rows.map(r => {
        const v = Number(r[column]);
        if (!Number.isFinite(v) && r[column] !== 'inf' && r[column] !== '-inf') {
            if (r[column] === 'true') return 1;
            if (r[column] === 'false') return 0;
        }
        return v;
    });
}
