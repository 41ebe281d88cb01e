use serde_json::json;

use crate::corpus::{Review, Taxonomy};
use crate::prompting::{PromptBundle, Variant};

pub const EXTRACTION_SYSTEM_PROMPT: &str = r#"You are an aspect-based sentiment analyzer tasked with extracting sentiment 
(positive, negative, or neutral) for specific aspects from user reviews.

Begin with a concise checklist (3--7 bullets) of what you will do; 
keep items conceptual, not implementation-level.

Each input review is a JSON object containing:
- 'title': the review title.
- 'liked': what the guest liked about the accommodation.
- 'disliked': what the guest disliked about the accommodation.

Note:
- Positive points may occasionally appear in the 'disliked' section, 
  and negative points in the 'liked' section.
- Map all aspects to the closest match from the provided aspect leaf list 
  (aspect leaves are grouped under parent categories) if either an exact match 
  or a close paraphrase/typo is found; otherwise, ignore the mention.

For each review, output a JSON array. Each array element should be an object 
with the following keys:
- aspect_parent: the parent category (e.g., "CheckIn_CheckOut").
- aspect_leaf: the specific aspect leaf, as defined in the provided list 
  (e.g., "ease_booking_payment").
- sentiment: one of "positive", "negative", or "neutral".
- snippet: the snippet from the review that includes the aspect and sentiment 
  (e.g., "breakfast was great").

Guidelines:
- If a review contains multiple or conflicting sentiments for the same aspect, 
  list each sentiment separately along with its corresponding aspect.
- Maintain the order of aspect mentions as they appear in the review.
- Only include aspects from the provided list; discard others.
- If no valid aspects are found, output an empty array.

After forming the output, briefly verify that all included aspects are from the 
provided list and that sentiment labels are consistent with the extracted 
statements. If any inconsistency is found, correct the output.

Output Format:
[
  {
    "aspect_parent": "Room",
    "aspect_leaf": "cleanliness",
    "sentiment": "positive",
    "snippet": "room was very clean"
  },
  {
    "aspect_parent": "Service",
    "aspect_leaf": "staff_friendliness",
    "sentiment": "negative",
    "snippet": "receptionist was rude"
  },
  {
    "aspect_parent": "Room",
    "aspect_leaf": "cleanliness",
    "sentiment": "negative",
    "snippet": "There was a used towel in bathroom"
  }
]

Example output with no aspects:
[]"#;

const USER_TEMPLATE: &str = "Aspects: {aspects}\nReview: {review}";

/// Parent → leaves listing as a compact JSON object in taxonomy order.
pub fn render_aspect_listing(taxonomy: &Taxonomy) -> String {
    serde_json::to_string(&taxonomy.groups()).expect("serializable")
}

pub fn build_extraction_prompt(review: &Review, taxonomy: &Taxonomy) -> PromptBundle {
    let review_json = json!({
        "title": review.title,
        "liked": review.liked,
        "disliked": review.disliked,
    });
    let user = USER_TEMPLATE
        .replace("{aspects}", &render_aspect_listing(taxonomy))
        .replace("{review}", &review_json.to_string());
    PromptBundle {
        accommodation_id: review.accommodation_id.clone(),
        variant: Variant::Extraction,
        system: EXTRACTION_SYSTEM_PROMPT.to_string(),
        user,
        seed: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn review(id: &str, disliked: &str) -> Review {
        Review {
            review_id: id.into(),
            accommodation_id: "acc".into(),
            domain: "ski".into(),
            title: "Lovely stay".into(),
            liked: format!("{id} was great"),
            disliked: disliked.into(),
        }
    }

    #[test]
    fn system_prompt_is_fixed() {
        let t = Taxonomy::bundled();
        let a = build_extraction_prompt(&review("r1", ""), &t);
        let b = build_extraction_prompt(&review("r2", "noise"), &t);
        assert!(a.system.starts_with("You are an aspect-based sentiment analyzer"));
        assert!(a.system.ends_with("Example output with no aspects:\n[]"));
        assert_eq!(a.system, b.system);
        assert_ne!(a.user, b.user);
        assert_eq!(a.variant, Variant::Extraction);
    }

    #[test]
    fn empty_disliked_is_rendered() {
        let p = build_extraction_prompt(&review("r1", ""), &Taxonomy::bundled());
        assert!(p.user.contains(r#""disliked":"""#), "{}", p.user);
        assert!(p.user.starts_with("Aspects: {\"Room\":[\"cleanliness\",\"size\""));
        assert!(p.user.contains("\nReview: {\"title\":\"Lovely stay\""));
    }
}
