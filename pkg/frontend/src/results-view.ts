/** Aggregate outcome chart: per-rater groups of first-place counts.
 *
 * This is the only screen that shows method names; the rating flow never
 * receives them. Bars are plain divs scaled against the largest count, so
 * no chart library is needed.
 */

import { AggregateResults } from './api.js';

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function firstPlace(results: AggregateResults, rater: string, method: string): number {
  return results.rank_counts[rater]?.[method]?.[0] ?? 0;
}

export function renderResults(root: HTMLElement, results: AggregateResults | null): void {
  root.replaceChildren();
  const raters = results ? Object.keys(results.rank_counts).sort() : [];
  if (!results || raters.length === 0) {
    root.appendChild(el('p', 'empty-state', 'No ratings to show yet.'));
    return;
  }

  const chart = el('section', 'results-chart');
  const counts = raters.flatMap((rater) =>
    results.methods.map((method) => firstPlace(results, rater, method)),
  );
  const maxCount = Math.max(1, ...counts);

  for (const rater of raters) {
    const group = el('div', 'rater-group');
    group.dataset.rater = rater;
    group.appendChild(el('h3', 'rater-name', rater));
    const bars = el('div', 'bars');
    for (const method of results.methods) {
      const count = firstPlace(results, rater, method);
      const column = el('div', 'bar-column');
      const bar = el('div', 'bar');
      bar.style.height = `${Math.round((count / maxCount) * 100)}%`;
      bar.dataset.method = method;
      bar.dataset.count = String(count);
      column.append(
        el('span', 'bar-count', String(count)),
        bar,
        el('span', 'bar-label', method),
      );
      bars.appendChild(column);
    }
    group.appendChild(bars);
    chart.appendChild(group);
  }

  const legend = el('p', 'chart-caption', 'First-place counts per rater and method');
  chart.appendChild(legend);
  root.appendChild(chart);
}
