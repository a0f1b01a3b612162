// Archive browsing over plain HTTP GETs against the storage layout:
// {stream_id}/roi_{i:06}.png + .json, with an index.json listing.

export interface ArchiveMask {
  i: number;
  t: number;
  grid: { n: number; m: number };
  labels: boolean[];
  rects: [number, number, number, number][];
}

export interface GalleryItem {
  i: number;
  imageUrl: string;
  meta: ArchiveMask;
}

async function getJson(url: string): Promise<unknown> {
  const resp = await fetch(url);
  if (!resp.ok) throw new Error(`GET ${url} -> ${resp.status}`);
  return resp.json();
}

/**
 * List archived keyframes for a stream, ordered by i, optionally limited
 * to an inclusive [from, to] range of segment ordinals.
 */
export async function browseArchive(baseUrl: string, streamId: string,
                                    range?: [number, number],
                                    ): Promise<GalleryItem[]> {
  const base = baseUrl.replace(/\/$/, "");
  const index = await getJson(`${base}/${streamId}/index.json`) as
    { records: string[] };
  const items: GalleryItem[] = [];
  for (const name of index.records) {
    const match = /^roi_(\d{6})\.json$/.exec(name);
    if (!match) continue;
    const i = parseInt(match[1], 10);
    if (range && (i < range[0] || i > range[1])) continue;
    const meta = await getJson(`${base}/${streamId}/${name}`) as ArchiveMask;
    items.push({
      i,
      imageUrl: `${base}/${streamId}/roi_${match[1]}.png`,
      meta,
    });
  }
  items.sort((a, b) => a.i - b.i);
  return items;
}
