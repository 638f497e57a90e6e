/** Blinded sample view: reference scan, unlabeled candidates, rank capture.
 *
 * Candidates render in the server-provided order with no method names or
 * hints; tiles are labeled only by presentation position. Clicking a tile
 * assigns the next rank; clicking a ranked tile retracts it (and shifts
 * later ranks down). Submit stays disabled until every candidate holds a
 * rank, so the outgoing ranking is always a complete permutation.
 *
 * Comparison affordances: per-tile flicker toggle (swaps the candidate and
 * reference in place, the primary technique for subtle noise differences),
 * an optional side-by-side layout, and a linked zoom that scales every
 * scan identically. No other client-side image processing is applied.
 */

import { PendingSample } from './api.js';

export interface RatingViewOptions {
  imageUrl: (path: string) => string;
  prefill?: string[] | null;
}

interface TileState {
  candidateId: string;
  tile: HTMLLIElement;
  image: HTMLImageElement;
  badge: HTMLSpanElement;
  toggle: HTMLButtonElement;
  candidateSrc: string;
}

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

/**
 * Render one pending sample into `root`; resolves with the candidate ids
 * in rank order once the rater submits.
 */
export function renderSample(
  root: HTMLElement,
  sample: PendingSample,
  options: RatingViewOptions,
): Promise<string[]> {
  root.replaceChildren();
  const view = el('section', 'rating-view');

  const progress = el(
    'header',
    'progress',
    `Sample ${sample.index + 1} of ${sample.total}`,
  );
  view.appendChild(progress);

  const controls = el('div', 'compare-controls');
  const zoomLabel = el('label', 'zoom-control', 'Zoom ');
  const zoom = el('input', 'zoom');
  zoom.type = 'range';
  zoom.min = '1';
  zoom.max = '4';
  zoom.step = '0.5';
  zoom.value = '1';
  zoomLabel.appendChild(zoom);
  const sideLabel = el('label', 'layout-control');
  const sideBySide = el('input', 'side-by-side');
  sideBySide.type = 'checkbox';
  sideLabel.append(sideBySide, document.createTextNode(' Side by side'));
  controls.append(zoomLabel, sideLabel);
  view.appendChild(controls);

  const referenceSrc = options.imageUrl(sample.reference.image);
  const referencePanel = el('figure', 'reference-panel');
  const referenceImage = el('img', 'scan reference-image');
  referenceImage.src = referenceSrc;
  referenceImage.alt = 'reference scan';
  const referenceCaption = el('figcaption', undefined, 'Reference');
  referencePanel.append(referenceImage, referenceCaption);
  view.appendChild(referencePanel);

  const list = el('ol', 'candidates');
  const tiles: TileState[] = [];
  // ranking holds candidate ids in rank order (index 0 = best match)
  const ranking: string[] = [];

  const submit = el('button', 'submit', 'Submit ranking');
  submit.disabled = true;

  function refresh(): void {
    for (const state of tiles) {
      const position = ranking.indexOf(state.candidateId);
      state.badge.textContent = position === -1 ? '–' : String(position + 1);
      state.tile.classList.toggle('ranked', position !== -1);
    }
    submit.disabled = ranking.length !== tiles.length;
  }

  function toggleRank(candidateId: string): void {
    const position = ranking.indexOf(candidateId);
    if (position === -1) {
      ranking.push(candidateId);
    } else {
      ranking.splice(position, 1);
    }
    refresh();
  }

  sample.candidates.forEach((candidate, index) => {
    const tile = el('li', 'candidate');
    tile.dataset.candidateId = candidate.candidate_id;

    const image = el('img', 'scan candidate-image');
    const candidateSrc = options.imageUrl(candidate.image);
    image.src = candidateSrc;
    image.alt = `candidate scan ${index + 1}`;
    image.dataset.showing = 'candidate';

    const badge = el('span', 'rank-badge', '–');
    const caption = el('span', 'tile-caption', `Candidate ${index + 1}`);

    const rank = el('button', 'rank-button', 'Rank');
    rank.addEventListener('click', () => toggleRank(candidate.candidate_id));

    const toggle = el('button', 'toggle-compare', 'Flip to reference');
    toggle.addEventListener('click', () => {
      const showingCandidate = image.dataset.showing === 'candidate';
      image.src = showingCandidate ? referenceSrc : candidateSrc;
      image.dataset.showing = showingCandidate ? 'reference' : 'candidate';
      toggle.textContent = showingCandidate ? 'Flip to candidate' : 'Flip to reference';
    });

    tile.append(badge, image, caption, rank, toggle);
    list.appendChild(tile);
    tiles.push({
      candidateId: candidate.candidate_id,
      tile,
      image,
      badge,
      toggle,
      candidateSrc,
    });
  });
  view.appendChild(list);
  view.appendChild(submit);

  zoom.addEventListener('input', () => {
    // linked zoom: identical transform on every scan, reference included
    for (const image of view.querySelectorAll<HTMLImageElement>('img.scan')) {
      image.style.transform = `scale(${zoom.value})`;
    }
  });
  sideBySide.addEventListener('change', () => {
    view.classList.toggle('side-by-side-layout', sideBySide.checked);
  });

  if (options.prefill) {
    for (const candidateId of options.prefill) {
      if (tiles.some((t) => t.candidateId === candidateId)) {
        ranking.push(candidateId);
      }
    }
    refresh();
  }

  root.appendChild(view);

  return new Promise<string[]>((resolve) => {
    submit.addEventListener('click', () => {
      if (ranking.length !== tiles.length) return;
      submit.disabled = true;
      for (const state of tiles) state.tile.classList.add('locked');
      resolve([...ranking]);
    });
  });
}
